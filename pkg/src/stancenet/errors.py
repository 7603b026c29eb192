"""Error hierarchy shared across the package.

Each error carries a ``category`` used by the service layer and the CLI to
map failures onto HTTP status codes and process exit codes:
usage/config -> 1, data -> 2, backend -> 3.
"""


class StancenetError(Exception):
    category = "data"
    http_status = 422


class ConfigError(StancenetError):
    """Bad configuration, flags, templates, or option values."""

    category = "usage"
    http_status = 400


class DataError(StancenetError):
    """Invalid or missing input data."""

    category = "data"
    http_status = 422


class NotFoundError(DataError):
    """A referenced resource (annotator, task, file) does not exist."""

    http_status = 404


class BackendError(StancenetError):
    """The LLM wire backend failed or returned garbage."""

    category = "backend"
    http_status = 502
