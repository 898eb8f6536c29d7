import assert from "node:assert/strict";
import { test } from "node:test";

import { ApiError, ServiceClient, type EnhanceResponse } from "../src/api.js";
import { attentionBars, Gallery } from "../src/view.js";

type Handler = (method: string, path: string, body: unknown) => { status: number; body: unknown };

function mockFetch(handler: Handler, delays: number[] = []): typeof fetch {
  let call = 0;
  return (async (url: string | URL | Request, init?: RequestInit) => {
    const path = String(url).replace("http://svc", "");
    const delay = delays[call++] ?? 0;
    const signal = init?.signal;
    await new Promise<void>((resolve, reject) => {
      const t = setTimeout(resolve, delay);
      signal?.addEventListener("abort", () => {
        clearTimeout(t);
        reject(Object.assign(new Error("aborted"), { name: "AbortError" }));
      });
    });
    const r = handler(init?.method ?? "GET", path, init?.body ? JSON.parse(String(init.body)) : undefined);
    return new Response(JSON.stringify(r.body), { status: r.status });
  }) as typeof fetch;
}

function fakeService(): Handler {
  const sessions = new Map<string, number>();
  return (method, path, body) => {
    if (method === "POST" && path === "/sessions") {
      const id = `s${sessions.size + 1}`;
      sessions.set(id, 0);
      return { status: 201, body: { session_id: id, model_id: "m" } };
    }
    const m = path.match(/^\/sessions\/([^/]+)\/(pairs|enhance)(?:\/(\d+))?$/);
    if (!m || !sessions.has(m[1])) return { status: 404, body: { code: "session_not_found", message: "no session" } };
    const n = sessions.get(m[1])!;
    if (m[2] === "pairs" && method === "POST") {
      const b = body as { original: string };
      if (b.original === "corrupt") return { status: 400, body: { code: "decode_error", message: "not a PNG" } };
      sessions.set(m[1], n + 1);
      return { status: 201, body: { count: n + 1 } };
    }
    if (m[2] === "pairs" && method === "DELETE") {
      sessions.set(m[1], n - 1);
      return { status: 200, body: { count: n - 1 } };
    }
    if (n === 0) return { status: 409, body: { code: "empty_session", message: "add a pair first" } };
    const method_ = (body as { method: string }).method;
    const r: Partial<EnhanceResponse> = { image: "", method: method_ as EnhanceResponse["method"], i_new: n };
    if (method_ === "masked") r.attention = Array.from({ length: n }, () => 1 / n);
    return { status: 200, body: r };
  };
}

test("committing pairs increments the server count", async () => {
  const client = new ServiceClient("http://svc", mockFetch(fakeService()));
  const id = await client.createSession();
  assert.equal(await client.addPair(id, "a", "b"), 1);
  assert.equal(await client.addPair(id, "c", "d"), 2);
  assert.equal(await client.deletePair(id, 0), 1);
});

test("server errors surface with their code", async () => {
  const client = new ServiceClient("http://svc", mockFetch(fakeService()));
  const id = await client.createSession();
  await assert.rejects(client.addPair(id, "corrupt", "x"), (e: unknown) => {
    assert.ok(e instanceof ApiError);
    assert.equal(e.code, "decode_error");
    assert.equal(e.status, 400);
    assert.match(e.describe(), /decode_error \(400\)/);
    return true;
  });
  await assert.rejects(client.enhance(id, "img", "masked"), (e: ApiError) => e.code === "empty_session");
  await assert.rejects(client.addPair("nope", "a", "b"), (e: ApiError) => e.status === 404);
  const offline = new ServiceClient("http://svc", (async () => {
    throw new TypeError("connection refused");
  }) as typeof fetch);
  await assert.rejects(offline.health(), (e: ApiError) => e.code === "network_error");
});

test("a newer enhance supersedes the one in flight", async () => {
  const client = new ServiceClient("http://svc", mockFetch(fakeService(), [0, 0, 50, 0]));
  const id = await client.createSession();
  await client.addPair(id, "a", "b");
  const first = client.enhance(id, "img", "masked");
  const second = client.enhance(id, "img", "average");
  assert.equal(await first, null);
  assert.equal((await second)?.method, "average");
});

test("attention bars sum to one and disappear for average", async () => {
  const client = new ServiceClient("http://svc", mockFetch(fakeService()));
  const id = await client.createSession();
  for (let i = 0; i < 3; ++i) await client.addPair(id, "a", "b");
  const masked = (await client.enhance(id, "img", "masked"))!;
  const bars = attentionBars(masked);
  assert.equal(bars.length, 3);
  assert.ok(Math.abs(bars.reduce((s, b) => s + b.weight, 0) - 1) < 1e-12);
  assert.deepEqual(attentionBars((await client.enhance(id, "img", "average"))!), []);
});

test("gallery follows the server count", () => {
  const g = new Gallery();
  g.commit({ original: "a", retouched: "b" }, 1);
  g.commit({ original: "c", retouched: "d" }, 2);
  g.remove(0, 1);
  assert.equal(g.items[0].original, "c");
  assert.throws(() => g.commit({ original: "e", retouched: "f" }, 5));
});
