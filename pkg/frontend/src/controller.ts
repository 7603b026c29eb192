// Session state machine, deliberately DOM-free so the labeling flow is fully
// testable against a fake server. All mutation goes through the API; the
// browser holds no source of truth, so a page reload resumes cleanly from
// GET /api/task.

import { ApiClient, ApiError, Agreement, Codebook, Progress, Task } from "./api";
import { Primary, SESSION_LABEL_CAP, validateSelection } from "./model";

export type Phase = "enter-id" | "loading" | "labeling" | "done" | "fatal";

export interface UiState {
  phase: Phase;
  annotator: string | null;
  task: Task | null;
  primary: Primary | null;
  sublabels: Set<string>;
  codebook: Codebook | null;
  progress: Progress | null;
  agreement: Agreement | null;
  inlineError: string | null;
  retryBanner: string | null;
  submitting: boolean;
  labeledThisSession: number;
  breakSuggested: boolean;
  fatalError: string | null;
}

function initialState(): UiState {
  return {
    phase: "enter-id",
    annotator: null,
    task: null,
    primary: null,
    sublabels: new Set(),
    codebook: null,
    progress: null,
    agreement: null,
    inlineError: null,
    retryBanner: null,
    submitting: false,
    labeledThisSession: 0,
    breakSuggested: false,
    fatalError: null,
  };
}

export class SessionController {
  readonly state: UiState;
  private api: ApiClient;
  private onChange: (state: UiState) => void;

  constructor(api: ApiClient, onChange: (state: UiState) => void = () => {}) {
    this.api = api;
    this.onChange = onChange;
    this.state = initialState();
  }

  private emit(): void {
    this.onChange(this.state);
  }

  async start(annotator: string): Promise<void> {
    this.state.annotator = annotator.trim();
    if (!this.state.annotator) {
      this.state.inlineError = "enter an annotator id";
      this.emit();
      return;
    }
    this.state.phase = "loading";
    this.emit();
    try {
      this.state.codebook = await this.api.codebook();
      await this.refreshPanels();
      await this.loadNextTask();
    } catch (err) {
      this.handleLoadError(err);
    }
  }

  /** Refetch the current task after a connectivity failure; no state is lost. */
  async retry(): Promise<void> {
    this.state.retryBanner = null;
    this.emit();
    try {
      if (this.state.codebook === null) {
        this.state.codebook = await this.api.codebook();
      }
      await this.refreshPanels();
      await this.loadNextTask();
    } catch (err) {
      this.handleLoadError(err);
    }
  }

  private handleLoadError(err: unknown): void {
    if (err instanceof ApiError && err.category === "network") {
      this.state.retryBanner = err.message;
    } else if (err instanceof ApiError && err.category === "data") {
      this.state.phase = "fatal";
      this.state.fatalError = err.message;
    } else {
      this.state.retryBanner = err instanceof Error ? err.message : String(err);
    }
    this.emit();
  }

  private async loadNextTask(): Promise<void> {
    if (!this.state.annotator) return;
    const task = await this.api.getTask(this.state.annotator);
    if (task.done) {
      this.state.phase = "done";
      this.state.task = null;
      await this.refreshPanels();
    } else {
      this.state.phase = "labeling";
      this.state.task = task;
      this.state.primary = null;
      this.state.sublabels = new Set();
      this.state.inlineError = null;
    }
    this.emit();
  }

  async refreshPanels(): Promise<void> {
    this.state.progress = await this.api.progress();
    this.state.agreement = await this.api.agreement();
    this.emit();
  }

  selectPrimary(primary: Primary): void {
    this.state.primary = primary;
    // dropping to a different side clears now-invalid sublabels
    const allowed = new Set(
      primary === "AntiTrans"
        ? ["TM", "ATM", "XOR", "TERF", "RW", "INTRA"]
        : primary === "ProTrans"
          ? ["CEL", "REF", "CON"]
          : [],
    );
    this.state.sublabels = new Set([...this.state.sublabels].filter((s) => allowed.has(s)));
    this.state.inlineError = null;
    this.emit();
  }

  toggleSublabel(sublabel: string): void {
    if (this.state.sublabels.has(sublabel)) {
      this.state.sublabels.delete(sublabel);
    } else {
      this.state.sublabels.add(sublabel);
    }
    this.emit();
  }

  canSubmit(): boolean {
    return (
      this.state.phase === "labeling" &&
      !this.state.submitting &&
      validateSelection(this.state.primary, this.state.sublabels) === null
    );
  }

  async submitAndAdvance(): Promise<void> {
    const { annotator, task, primary } = this.state;
    if (!annotator || !task?.post_id || this.state.submitting) return;
    const validationError = validateSelection(primary, this.state.sublabels);
    if (validationError !== null) {
      this.state.inlineError = validationError;
      this.emit();
      return;
    }
    const savedPrimary = this.state.primary;
    const savedSublabels = new Set(this.state.sublabels);
    // optimistic: count the label locally, roll back if the server refuses
    this.state.submitting = true;
    this.state.labeledThisSession += 1;
    if (this.state.labeledThisSession === SESSION_LABEL_CAP) {
      this.state.breakSuggested = true;
    }
    this.emit();
    try {
      await this.api.submitLabel(annotator, task.post_id, primary as string, [
        ...savedSublabels,
      ].sort());
    } catch (err) {
      this.state.submitting = false;
      this.state.labeledThisSession -= 1;
      this.state.primary = savedPrimary;
      this.state.sublabels = savedSublabels;
      if (err instanceof ApiError && err.category === "network") {
        this.state.retryBanner = err.message;
      } else {
        this.state.inlineError = err instanceof Error ? err.message : String(err);
      }
      this.emit();
      return;
    }
    this.state.submitting = false;
    try {
      await this.refreshPanels();
      await this.loadNextTask();
    } catch (err) {
      this.handleLoadError(err);
    }
  }

  async skipCurrent(reason: string): Promise<void> {
    const { annotator, task } = this.state;
    if (!annotator || !task?.post_id) return;
    if (!reason.trim()) {
      this.state.inlineError = "a skip needs a reason";
      this.emit();
      return;
    }
    try {
      await this.api.skip(annotator, task.post_id, reason);
      await this.refreshPanels();
      await this.loadNextTask();
    } catch (err) {
      if (err instanceof ApiError && err.category === "network") {
        this.state.retryBanner = err.message;
        this.emit();
      } else {
        this.state.inlineError = err instanceof Error ? err.message : String(err);
        this.emit();
      }
    }
  }

  dismissBreak(): void {
    this.state.breakSuggested = false;
    this.emit();
  }
}
