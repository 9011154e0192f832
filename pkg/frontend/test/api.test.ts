import { describe, expect, it } from "vitest";

import { ApiError, ServiceClient } from "../src/api.js";
import { MockService, isDocumented, pointCard } from "./mock.js";

function makeClient(mock: MockService): ServiceClient {
  return new ServiceClient("http://service.test", mock.fetch);
}

describe("ServiceClient", () => {
  it("drives a full session through exactly the documented endpoints", async () => {
    const mock = new MockService({
      sessionId: "s1",
      queries: [pointCard(3, 1), pointCard(7, 2)],
      gammas: [0.3, 0.2],
      mmds: [0.9, 0.8],
    });
    const client = makeClient(mock);

    await client.getState("s1");
    const card = await client.nextQuery("s1");
    expect(card.unit_index).toBe(3);
    await client.submitAnswer("s1", 1);
    await client.getHistory("s1");
    await client.deleteSession("s1");

    expect(mock.calls.length).toBe(5);
    for (const call of mock.calls) {
      expect(isDocumented(call), `${call.method} ${call.path}`).toBe(true);
    }
  });

  it("submits exactly the documented answer payload", async () => {
    const mock = new MockService({
      sessionId: "s1",
      queries: [pointCard(0, 1)],
      gammas: [0.1],
      mmds: [0.5],
    });
    const client = makeClient(mock);
    await client.nextQuery("s1");
    await client.submitAnswer("s1", 2.75);
    const answerCall = mock.calls.find((c) => c.path.endsWith("/answers"));
    expect(answerCall?.body).toEqual({ answer: 2.75 });
  });

  it("raises ApiError with status and detail on failures", async () => {
    const mock = new MockService({ sessionId: "s1", queries: [], gammas: [], mmds: [] });
    const client = makeClient(mock);
    await expect(client.getState("other")).rejects.toThrowError(ApiError);
    await expect(client.getState("other")).rejects.toMatchObject({ status: 404 });
  });

  it("sends create payloads verbatim", async () => {
    const mock = new MockService({ sessionId: "s1", queries: [], gammas: [], mmds: [] });
    const client = makeClient(mock);
    const payload = {
      dataset: { units: [[0.1]], actions: [1], outcomes: [1] },
      config: { model: "logistic", target: [0.0] },
    };
    await expect(client.createSession(payload)).rejects.toMatchObject({ status: 400 });
    expect(mock.calls[0]).toMatchObject({ method: "POST", path: "/sessions", body: payload });
  });
});
