import type {
  ErrorBody,
  ExportResponse,
  JudgmentDraft,
  NextResponse,
  StatusResponse,
  SubmitResponse,
  WugLayout,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** A structured rejection from the service, carrying its error code. */
export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = "ServiceError";
    this.code = code;
    this.status = status;
  }
}

export function isNetworkFailure(err: unknown): boolean {
  return !(err instanceof ServiceError) && err instanceof Error;
}

/**
 * Client for one annotation project. All traffic goes through the
 * injected fetch function, so tests can swap in an in-memory service
 * and the app shell can pass window.fetch.
 */
export class AnnotationClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;
  readonly projectId: string;

  constructor(baseUrl: string, projectId: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.projectId = projectId;
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    const body = (await response.json()) as T | ErrorBody;
    if (!response.ok) {
      const error = (body as ErrorBody).error;
      if (error && typeof error.code === "string") {
        throw new ServiceError(error.code, error.message, response.status);
      }
      throw new ServiceError("http_error", `HTTP ${response.status}`, response.status);
    }
    return body as T;
  }

  private projectPath(suffix: string): string {
    return `/projects/${encodeURIComponent(this.projectId)}${suffix}`;
  }

  nextPair(annotator: string): Promise<NextResponse> {
    return this.request<NextResponse>(
      this.projectPath(`/next?annotator=${encodeURIComponent(annotator)}`),
    );
  }

  submitJudgment(draft: JudgmentDraft): Promise<SubmitResponse> {
    return this.request<SubmitResponse>(this.projectPath("/judgments"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(draft),
    });
  }

  status(): Promise<StatusResponse> {
    return this.request<StatusResponse>(this.projectPath("/status"));
  }

  advance(closeOpen = false): Promise<StatusResponse> {
    return this.request<StatusResponse>(this.projectPath("/advance"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ close_open: closeOpen }),
    });
  }

  wug(lemma: string): Promise<WugLayout> {
    return this.request<WugLayout>(this.projectPath(`/wug/${encodeURIComponent(lemma)}`));
  }

  exportWug(lemma: string): Promise<ExportResponse> {
    return this.request<ExportResponse>(
      this.projectPath(`/export/${encodeURIComponent(lemma)}`),
    );
  }
}
