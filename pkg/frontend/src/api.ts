/**
 * Typed client for the elicitation service.
 *
 * Exactly six endpoints exist; every mutation goes through this module so
 * the UI can never touch session state any other way.
 */

export interface QueryCard {
  kind: "point" | "comparison";
  unit_index: number;
  action: number | null;
  covariates: number[];
  step: number;
  context: Record<string, number>;
}

export interface Trajectory {
  gamma_hat: number[];
  mmd: number[];
  decision: number[];
}

export interface SessionSnapshot {
  id: string;
  status: "ready" | "awaiting_answer" | "closed";
  target: number[];
  orientation: string;
  criterion: string;
  query_kind: string;
  gamma_hat: number;
  mmd: number;
  recommended_action: number;
  pool_size: number;
  answered: number;
  pending_query: QueryCard | null;
  trajectory: Trajectory;
}

export interface HistoryEntry {
  step: number;
  query: QueryCard;
  answer: number;
  gamma_hat: number;
  mmd: number;
  decision: number;
  timestamp: number;
}

export interface CreateSessionRequest {
  dataset: { units: number[][]; actions: number[]; outcomes: number[] };
  config: Record<string, unknown>;
}

export interface CreatedSession {
  id: string;
  status: string;
  gamma_hat: number;
  mmd: number;
  recommended_action: number;
  pool_size: number;
}

export interface AnswerResult {
  status: string;
  gamma_hat: number;
  mmd: number;
  recommended_action: number;
  history_length: number;
  pool_size: number;
}

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`service returned ${status}: ${detail}`);
  }
}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    return response.statusText;
  }
}

export class ServiceClient {
  constructor(private baseUrl: string, private fetchFn: typeof fetch = fetch) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new ApiError(response.status, await parseDetail(response));
    }
    if (response.status === 204) {
      return undefined as T;
    }
    return (await response.json()) as T;
  }

  createSession(payload: CreateSessionRequest): Promise<CreatedSession> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getState(sessionId: string): Promise<SessionSnapshot> {
    return this.request(`/sessions/${sessionId}`);
  }

  nextQuery(sessionId: string): Promise<QueryCard> {
    return this.request(`/sessions/${sessionId}/next-query`);
  }

  submitAnswer(sessionId: string, answer: number): Promise<AnswerResult> {
    return this.request(`/sessions/${sessionId}/answers`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ answer }),
    });
  }

  getHistory(sessionId: string): Promise<HistoryEntry[]> {
    return this.request(`/sessions/${sessionId}/history`);
  }

  deleteSession(sessionId: string): Promise<void> {
    return this.request(`/sessions/${sessionId}`, { method: "DELETE" });
  }
}
