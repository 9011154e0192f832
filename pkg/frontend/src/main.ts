/**
 * Entry point: reads ?session=<id>&base=<url>&threshold=<gamma> from the
 * page URL and mounts the dashboard on #app.
 */

import { ServiceClient } from "./api.js";
import { SessionApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("base") ?? "http://127.0.0.1:8711";
const sessionId = params.get("session");
const threshold = Number(params.get("threshold") ?? "0.1");

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
if (!sessionId) {
  root.textContent = "add ?session=<id> to the URL (and optionally &base=<service url>)";
} else {
  const app = new SessionApp(new ServiceClient(base), sessionId, root, {
    reliableThreshold: Number.isFinite(threshold) ? threshold : 0.1,
  });
  app.start();
}
