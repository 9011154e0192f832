/**
 * Recording fetch mock: replays a scripted session and logs every call so
 * tests can assert the client touches only the documented endpoints.
 */

import type { HistoryEntry, QueryCard, SessionSnapshot } from "../src/api.js";

export interface RecordedCall {
  method: string;
  path: string;
  body: unknown;
}

export interface MockScript {
  sessionId: string;
  queries: QueryCard[];
  /** gamma_hat after each answer, in order. */
  gammas: number[];
  mmds: number[];
  queryKind?: "point" | "comparison";
}

const DOCUMENTED = [
  { method: "POST", pattern: /^\/sessions$/ },
  { method: "GET", pattern: /^\/sessions\/[^/]+$/ },
  { method: "GET", pattern: /^\/sessions\/[^/]+\/next-query$/ },
  { method: "POST", pattern: /^\/sessions\/[^/]+\/answers$/ },
  { method: "GET", pattern: /^\/sessions\/[^/]+\/history$/ },
  { method: "DELETE", pattern: /^\/sessions\/[^/]+$/ },
];

export function isDocumented(call: RecordedCall): boolean {
  return DOCUMENTED.some((d) => d.method === call.method && d.pattern.test(call.path));
}

function jsonResponse(status: number, body: unknown): Response {
  // Plain object instead of a real Response: undici body streams need real
  // timers to settle, while this resolves on microtasks alone.
  const payload = JSON.stringify(body);
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: String(status),
    json: async () => JSON.parse(payload),
  } as unknown as Response;
}

export class MockService {
  calls: RecordedCall[] = [];
  private answered = 0;
  private pending: QueryCard | null = null;
  private history: HistoryEntry[] = [];

  constructor(private script: MockScript, private baseUrl = "http://service.test") {}

  private snapshot(): SessionSnapshot {
    const trajectoryGamma = [0.42, ...this.script.gammas.slice(0, this.answered)];
    const trajectoryMmd = [1.0, ...this.script.mmds.slice(0, this.answered)];
    return {
      id: this.script.sessionId,
      status: this.pending ? "awaiting_answer" : "ready",
      target: [0.0],
      orientation: "lower",
      criterion: "dm_aware",
      query_kind: this.script.queryKind ?? "point",
      gamma_hat: trajectoryGamma[trajectoryGamma.length - 1],
      mmd: trajectoryMmd[trajectoryMmd.length - 1],
      recommended_action: 0,
      pool_size: this.script.queries.length - this.answered,
      answered: this.answered,
      pending_query: this.pending,
      trajectory: {
        gamma_hat: trajectoryGamma,
        mmd: trajectoryMmd,
        decision: trajectoryGamma.map(() => 0),
      },
    };
  }

  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    if (!url.startsWith(this.baseUrl)) {
      throw new Error(`unexpected origin: ${url}`);
    }
    const path = url.slice(this.baseUrl.length);
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(String(init.body)) : null;
    this.calls.push({ method, path, body });

    const sid = this.script.sessionId;
    if (method === "GET" && path === `/sessions/${sid}`) {
      return jsonResponse(200, this.snapshot());
    }
    if (method === "GET" && path === `/sessions/${sid}/next-query`) {
      if (this.pending) {
        return jsonResponse(200, this.pending);
      }
      if (this.answered >= this.script.queries.length) {
        return jsonResponse(409, { detail: "pool exhausted" });
      }
      this.pending = this.script.queries[this.answered];
      return jsonResponse(200, this.pending);
    }
    if (method === "POST" && path === `/sessions/${sid}/answers`) {
      if (!this.pending) {
        return jsonResponse(409, { detail: "no pending query to answer" });
      }
      const answer = (body as { answer: number }).answer;
      if (this.pending.kind === "comparison" && answer !== 0 && answer !== 1) {
        return jsonResponse(422, { detail: "comparison queries take answers in {0, 1}" });
      }
      const card = this.pending;
      this.pending = null;
      const gamma = this.script.gammas[this.answered];
      const mmd = this.script.mmds[this.answered];
      this.answered += 1;
      this.history.push({
        step: this.answered,
        query: card,
        answer,
        gamma_hat: gamma,
        mmd,
        decision: 0,
        timestamp: 0,
      });
      return jsonResponse(200, {
        status: "ready",
        gamma_hat: gamma,
        mmd,
        recommended_action: 0,
        history_length: this.answered,
        pool_size: this.script.queries.length - this.answered,
      });
    }
    if (method === "GET" && path === `/sessions/${sid}/history`) {
      return jsonResponse(200, this.history);
    }
    if (method === "DELETE" && path === `/sessions/${sid}`) {
      return {
        ok: true,
        status: 204,
        statusText: "204",
        json: async () => null,
      } as unknown as Response;
    }
    if (path.startsWith("/sessions/")) {
      return jsonResponse(404, { detail: "unknown session" });
    }
    return jsonResponse(400, { detail: `unhandled ${method} ${path}` });
  };
}

export function pointCard(unitIndex: number, step: number): QueryCard {
  return {
    kind: "point",
    unit_index: unitIndex,
    action: 1,
    covariates: [0.5 * unitIndex],
    step,
    context: { p_outcome: 0.4 },
  };
}

export function comparisonCard(unitIndex: number, step: number): QueryCard {
  return {
    kind: "comparison",
    unit_index: unitIndex,
    action: null,
    covariates: [0.5 * unitIndex],
    step,
    context: { p_comparison: 0.6 },
  };
}
