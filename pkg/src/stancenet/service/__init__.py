from .app import AnnotationRuntime, create_app

__all__ = ["AnnotationRuntime", "create_app"]
