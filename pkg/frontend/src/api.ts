/** Typed client for the annotation service. All context shown in the UI
 * comes from these payloads verbatim; the client does no formatting. */

export interface ContextPayload {
  time_display: string | null;
  place_display: string | null;
  tags_display: string[];
  description_display: string | null;
}

export interface PlanItem {
  item_id: string;
  context: ContextPayload;
}

export interface BatchView {
  session_complete: boolean;
  batch_index: number;
  total_batches: number;
  classes: string[];
  mode: string;
  groups: PlanItem[][];
  labeled: string[];
}

export interface BatchMetrics {
  batch_index: number;
  batch_ms: number;
  cumulative_ms: number;
  holdout_f1: number;
  labeled_count: number;
}

export interface MetricsResponse {
  batches: BatchMetrics[];
  final_f1: number | null;
  session_complete: boolean;
}

export interface SessionConfigBody {
  dimension: string;
  mode?: string;
  batch_size?: number;
  total_batches?: number;
  strategy?: string;
  rng_seed?: number;
  seed_per_class?: number;
  holdout_frac?: number;
}

export interface ServerInfo {
  classes: string[];
  feature_dim: number;
  n_records: number;
  sessions: string[];
}

export class ApiError extends Error {
  constructor(public status: number, public code: string, message: string) {
    super(message);
  }
}

async function parseOrThrow<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return (await resp.json()) as T;
  }
  let code = "bad_request";
  let message = resp.statusText;
  try {
    const body = await resp.json();
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep defaults
  }
  throw new ApiError(resp.status, code, message);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  async info(): Promise<ServerInfo> {
    return parseOrThrow(await fetch(`${this.base}/api/info`));
  }

  async createSession(config: SessionConfigBody): Promise<string> {
    const resp = await fetch(`${this.base}/api/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(config),
    });
    const body = await parseOrThrow<{ session_id: string }>(resp);
    return body.session_id;
  }

  async currentBatch(sessionId: string): Promise<BatchView> {
    return parseOrThrow(
      await fetch(`${this.base}/api/sessions/${sessionId}/current-batch`),
    );
  }

  async submitLabel(
    sessionId: string,
    itemId: string,
    className: string,
    elapsedMs: number,
  ): Promise<string> {
    const resp = await fetch(`${this.base}/api/sessions/${sessionId}/labels`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ item_id: itemId, class: className, elapsed_ms: elapsedMs }),
    });
    const body = await parseOrThrow<{ status: string }>(resp);
    return body.status;
  }

  async metrics(sessionId: string): Promise<MetricsResponse> {
    return parseOrThrow(
      await fetch(`${this.base}/api/sessions/${sessionId}/metrics`),
    );
  }

  imageUrl(itemId: string): string {
    return `${this.base}/api/images/${encodeURIComponent(itemId)}`;
  }
}
