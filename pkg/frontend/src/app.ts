/**
 * Session controller: 2-second polling reads, single-flight mutations.
 *
 * Reads (state + history) refresh the dashboard; at most one mutation
 * (next-query or answer submission) is in flight at any time.
 */

import { ApiError, ServiceClient } from "./api.js";
import { renderDashboard, renderNotFound, renderRetryBanner, ViewOptions } from "./view.js";

export const POLL_INTERVAL_MS = 2000;

export class SessionApp {
  private mutationInFlight = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private client: ServiceClient,
    private sessionId: string,
    private root: HTMLElement,
    private options: ViewOptions = {}
  ) {}

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), POLL_INTERVAL_MS);
    this.root.addEventListener("click", (event) => {
      const target = event.target as HTMLElement;
      if (target.dataset?.role === "next-query") {
        void this.requestNextQuery();
      }
    });
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  async refresh(): Promise<void> {
    try {
      const snapshot = await this.client.getState(this.sessionId);
      const history = await this.client.getHistory(this.sessionId);
      renderDashboard(this.root, snapshot, history, (value) => void this.submit(value), this.options);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        this.stop();
        renderNotFound(this.root, this.sessionId);
        return;
      }
      renderRetryBanner(this.root, "service unreachable");
    }
  }

  async requestNextQuery(): Promise<void> {
    if (this.mutationInFlight) {
      return;
    }
    this.mutationInFlight = true;
    try {
      await this.client.nextQuery(this.sessionId);
    } catch (error) {
      if (!(error instanceof ApiError)) {
        renderRetryBanner(this.root, "service unreachable");
      }
    } finally {
      this.mutationInFlight = false;
    }
    await this.refresh();
  }

  async submit(value: number): Promise<void> {
    if (this.mutationInFlight) {
      return;
    }
    this.mutationInFlight = true;
    try {
      await this.client.submitAnswer(this.sessionId, value);
    } catch (error) {
      if (!(error instanceof ApiError)) {
        renderRetryBanner(this.root, "service unreachable");
      }
      // 4xx answers (e.g. 422 type mismatch) leave the pending card in
      // place; the follow-up refresh re-renders it.
    } finally {
      this.mutationInFlight = false;
    }
    await this.refresh();
  }
}
