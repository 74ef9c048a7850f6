/**
 * Typed client for the annotation session server.
 *
 * Every shape here mirrors one JSON payload from the HTTP API; nothing
 * is computed client-side. The console derives all displayed state
 * from these responses, so the types double as the UI's data contract.
 */

export interface NeighborSummary {
  count: number;
  sample: number[];
  annotated: number;
}

export interface QueryCardData {
  query_id: number;
  node: number;
  proposed_class: number;
  proposed_class_name: string;
  confidence: number;
  rejected_classes: number[];
  rejected_class_names: string[];
  degree: number;
  neighbors: NeighborSummary;
}

export type Phase = "selecting" | "awaiting-answers" | "training" | "done";

export interface SessionStatus {
  session_id: string;
  phase: Phase;
  budget: number;
  spent: number;
  remaining: number;
  accepts: number;
  rejects: number;
  pending_count: number;
  accuracy: number | null;
  total_entropy_bits: number;
  /** Present and true when the server ignored a repeat of an answer. */
  duplicate?: boolean;
}

export interface SessionCreated extends SessionStatus {
  pending: QueryCardData[];
}

export interface QueueResponse {
  session_id: string;
  phase: Phase;
  queries: QueryCardData[];
}

export interface CurvePoint {
  spent_budget: number;
  test_accuracy: number | null;
  total_entropy_bits: number;
}

export interface MetricsResponse extends SessionStatus {
  accuracy_curve: CurvePoint[];
}

export interface ExportResponse {
  report: {
    dataset: string;
    budget: number;
    budget_mode: string;
    seeds: number[];
    strategies: Record<string, unknown>;
    episodes: Array<{
      strategy: string;
      seed: number;
      final_accuracy: number;
      spent: number;
      accepts: number;
      rejects: number;
      queries: number;
    }>;
    failures: unknown[];
  };
  /** Same curve table the harness writes to curves.csv, full precision. */
  curves_csv: string;
}

export interface CreateSessionPayload {
  dataset: string;
  budget?: number;
  batch_size?: number;
  seed?: number;
  alpha?: number;
  async_training?: boolean;
  [extra: string]: unknown;
}

/** Error carrying the HTTP status so callers can branch on conflicts. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    /* non-JSON error body; keep the status text */
  }
  throw new ApiError(response.status, detail);
}

export class SessionApi {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike = (input, init) =>
      fetch(input, init),
  ) {}

  private url(path: string): string {
    return `${this.base.replace(/\/$/, "")}${path}`;
  }

  async createSession(
    payload: CreateSessionPayload,
  ): Promise<SessionCreated> {
    const response = await this.fetchFn(this.url("/sessions"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return parseOrThrow<SessionCreated>(response);
  }

  async getQueries(sessionId: string): Promise<QueueResponse> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/queries`),
    );
    return parseOrThrow<QueueResponse>(response);
  }

  async submitAnswer(
    sessionId: string,
    queryId: number,
    correct: boolean,
  ): Promise<SessionStatus> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/queries/${queryId}/answer`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ correct }),
      },
    );
    return parseOrThrow<SessionStatus>(response);
  }

  async getMetrics(sessionId: string): Promise<MetricsResponse> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/metrics`),
    );
    return parseOrThrow<MetricsResponse>(response);
  }

  async getExport(sessionId: string): Promise<ExportResponse> {
    const response = await this.fetchFn(
      this.url(`/sessions/${sessionId}/export`),
    );
    return parseOrThrow<ExportResponse>(response);
  }
}
