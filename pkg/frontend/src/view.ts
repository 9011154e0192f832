/**
 * DOM rendering for the session dashboard and the answer flow.
 *
 * Every number shown comes verbatim from service responses; the client
 * never recomputes reliability.  The pending query card appears exactly
 * when the session is awaiting an answer.
 */

import { HistoryEntry, QueryCard, SessionSnapshot } from "./api.js";
import { lineChart } from "./chart.js";

export interface ViewOptions {
  /** gamma_hat at or below this renders the "decision reliable" badge. */
  reliableThreshold?: number;
}

export type AnswerHandler = (value: number) => void;

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function renderRetryBanner(root: HTMLElement, message: string): void {
  root.replaceChildren(el("div", "banner banner-retry", `${message} - retrying`));
}

export function renderNotFound(root: HTMLElement, sessionId: string): void {
  root.replaceChildren(el("div", "banner banner-missing", `session ${sessionId} not found`));
}

function decisionBanner(snapshot: SessionSnapshot, threshold: number): HTMLElement {
  const banner = el("div", "banner banner-decision");
  banner.appendChild(
    el("span", "decision-action", `recommended action: ${snapshot.recommended_action}`)
  );
  banner.appendChild(el("span", "decision-gamma", `estimated error rate: ${snapshot.gamma_hat}`));
  banner.appendChild(el("span", "status-label", snapshot.status));
  if (snapshot.gamma_hat <= threshold) {
    banner.appendChild(el("span", "badge badge-reliable", "decision reliable"));
  }
  return banner;
}

function answerForm(card: QueryCard, onAnswer: AnswerHandler): HTMLElement {
  const form = el("form", "answer-form") as HTMLFormElement;
  form.noValidate = true;
  const note = el("p", "answer-error");

  if (card.kind === "comparison") {
    // Exactly two selectable options, mirroring the service's bit contract.
    for (const choice of [1, 0]) {
      const button = el("button", "answer-option", choice === 1 ? "treatment 1 is better" : "treatment 0 is better") as HTMLButtonElement;
      button.type = "button";
      button.dataset.choice = String(choice);
      button.addEventListener("click", () => onAnswer(choice));
      form.appendChild(button);
    }
  } else {
    const input = el("input", "answer-input") as HTMLInputElement;
    input.type = "number";
    input.step = "any";
    input.name = "answer";
    const submit = el("button", "answer-submit", "submit answer") as HTMLButtonElement;
    submit.type = "submit";
    form.append(input, submit);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      const raw = input.value.trim();
      const value = Number(raw);
      if (raw === "" || !Number.isFinite(value)) {
        note.textContent = "enter a number before submitting";
        return;
      }
      note.textContent = "";
      onAnswer(value);
    });
  }
  form.appendChild(note);
  return form;
}

function queryCardView(card: QueryCard, onAnswer: AnswerHandler): HTMLElement {
  const box = el("section", "query-card");
  box.appendChild(el("h2", "query-kind", card.kind === "comparison" ? "comparison query" : "point query"));
  box.appendChild(
    el("p", "query-unit", `unit ${card.unit_index}, covariates [${card.covariates.join(", ")}]`)
  );
  if (card.action !== null) {
    box.appendChild(el("p", "query-action", `counterfactual action: ${card.action}`));
  }
  const context = Object.entries(card.context)
    .map(([key, value]) => `${key}: ${value}`)
    .join(", ");
  box.appendChild(el("p", "query-context", `model context - ${context}`));
  box.appendChild(answerForm(card, onAnswer));
  return box;
}

export function renderDashboard(
  root: HTMLElement,
  snapshot: SessionSnapshot,
  history: HistoryEntry[],
  onAnswer: AnswerHandler,
  options: ViewOptions = {}
): void {
  const threshold = options.reliableThreshold ?? 0.1;
  root.replaceChildren();

  const header = el("header", "session-header");
  header.appendChild(el("h1", "session-id", `session ${snapshot.id}`));
  header.appendChild(
    el("p", "session-target", `target [${snapshot.target.join(", ")}], ${snapshot.orientation} is better`)
  );
  header.appendChild(
    el("p", "session-progress", `answered ${snapshot.answered}, pool ${snapshot.pool_size}`)
  );
  root.appendChild(header);

  root.appendChild(decisionBanner(snapshot, threshold));

  // One chart point per answered query; a fresh session shows none.
  const reliability = el("section", "chart chart-gamma");
  reliability.appendChild(el("h2", "chart-title", "estimated error rate after each answer"));
  reliability.appendChild(
    lineChart(history.map((entry) => entry.gamma_hat), { yMin: 0, yMax: 0.5, label: "gamma" })
  );
  root.appendChild(reliability);

  const imbalance = el("section", "chart chart-mmd");
  imbalance.appendChild(el("h2", "chart-title", "imbalance after each answer"));
  imbalance.appendChild(lineChart(history.map((entry) => entry.mmd), { yMin: 0, label: "mmd" }));
  root.appendChild(imbalance);

  if (snapshot.status === "awaiting_answer" && snapshot.pending_query) {
    root.appendChild(queryCardView(snapshot.pending_query, onAnswer));
  } else if (snapshot.status === "ready") {
    const next = el("button", "next-query", "ask for the next query") as HTMLButtonElement;
    next.type = "button";
    next.dataset.role = "next-query";
    root.appendChild(next);
  } else {
    root.appendChild(el("p", "session-closed", "session closed"));
  }
}
