// Typed client for the annotation endpoints. The fetch function is injected
// so tests can run against an in-memory fake server.

export interface Task {
  done: boolean;
  post_id?: string | null;
  display_text?: string | null;
  codebook_version?: string | null;
  annotator?: string | null;
}

export interface Agreement {
  observed_agreement: number | null;
  expected_agreement: number | null;
  kappa: number | null;
  n: number;
  note: string | null;
  reference_kappa: number | null;
}

export interface AnnotatorProgress {
  assigned: number;
  labeled: number;
  skipped: number;
  pending: number;
}

export interface Progress {
  total_samples: number;
  overlap_size: number;
  annotators: Record<string, AnnotatorProgress>;
}

export interface CodebookDefinition {
  id: string;
  side: "pro" | "anti" | "neutral";
  sublabel: string | null;
  definition: string;
}

export interface Codebook {
  version: string;
  definitions: CodebookDefinition[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  category: string;
  constructor(category: string, message: string) {
    super(message);
    this.category = category;
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let category = "data";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    category = body?.error?.category ?? category;
    message = body?.error?.message ?? message;
  } catch {
    // non-JSON error body; keep the status message
  }
  throw new ApiError(category, message);
}

export class ApiClient {
  private fetchFn: FetchLike;
  private base: string;

  constructor(fetchFn?: FetchLike, base = "") {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    this.base = base;
  }

  getTask(annotator: string): Promise<Task> {
    return this.request<Task>(`/api/task?annotator=${encodeURIComponent(annotator)}`);
  }

  submitLabel(annotator: string, postId: string, primary: string, sublabels: string[]): Promise<void> {
    return this.request(`/api/label`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator, post_id: postId, primary, sublabels }),
    });
  }

  skip(annotator: string, postId: string, reason: string): Promise<void> {
    return this.request(`/api/skip`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator, post_id: postId, reason }),
    });
  }

  agreement(): Promise<Agreement> {
    return this.request<Agreement>(`/api/agreement`);
  }

  progress(): Promise<Progress> {
    return this.request<Progress>(`/api/progress`);
  }

  codebook(): Promise<Codebook> {
    return this.request<Codebook>(`/api/codebook`);
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw new ApiError("network", err instanceof Error ? err.message : String(err));
    }
    return parseOrThrow<T>(response);
  }
}
