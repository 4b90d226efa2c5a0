/**
 * Typed client for the annotation service API.
 *
 * Every number the UI shows comes from these endpoints; the client adds no
 * interpretation beyond JSON decoding and error shaping.
 */

export interface RoundSummary {
  index: number;
  budget: number;
  selected: number[];
  covered_words: number;
  confidence: Record<string, number>;
}

export interface StateResponse {
  running: boolean;
  complete: boolean;
  error: string | null;
  pending_count: number;
  catalog_types: string[];
  corpus_size: number;
  rounds: RoundSummary[];
  labeled_count: number;
  unlabeled_count: number;
  budget_remaining: number;
  mla?: number;
}

export interface PendingItem {
  log_id: number;
  round: number;
  raw: string;
  words: string[];
  guess: string | null;
  submitted: boolean;
}

export interface PredictionRow {
  id: number;
  log: string;
  template: string | null;
  source: string | null;
}

export interface MetricsResponse {
  mla: number;
  pta: number;
  rta: number;
  correct_logs: number;
  total_logs: number;
  predicted_templates: number;
  ground_truth_templates: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
    public outstanding: number[] = [],
  ) {
    super(`${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private token: string | null = null,
  ) {}

  private headers(): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(`${this.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(), ...(init?.headers ?? {}) },
    });
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      const detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body);
      throw new ApiError(resp.status, detail, body.outstanding ?? []);
    }
    return body as T;
  }

  getState(): Promise<StateResponse> {
    return this.request<StateResponse>("/api/state");
  }

  async getPending(): Promise<PendingItem[]> {
    const body = await this.request<{ items: PendingItem[] }>("/api/pending");
    return body.items;
  }

  submitAnnotation(
    logId: number,
    template: string,
    submitter?: string,
  ): Promise<{ ok: boolean; remaining: number }> {
    return this.request("/api/annotations", {
      method: "POST",
      body: JSON.stringify({ log_id: logId, template, submitter: submitter ?? null }),
    });
  }

  advanceRound(): Promise<{ ok: boolean }> {
    return this.request("/api/rounds/advance", { method: "POST" });
  }

  async getPredictions(): Promise<PredictionRow[]> {
    const body = await this.request<{ predictions: PredictionRow[] }>("/api/predictions");
    return body.predictions;
  }

  getMetrics(): Promise<MetricsResponse> {
    return this.request<MetricsResponse>("/api/metrics");
  }
}
