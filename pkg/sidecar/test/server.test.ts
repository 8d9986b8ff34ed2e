import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DEFAULTS, SidecarConfig } from "../src/config.js";
import { SidecarService } from "../src/server.js";

const CONFIG: SidecarConfig = {
  ...DEFAULTS,
  port: 0,
  maxTextLength: 200,
  maxBodyBytes: 4096,
};

let service: SidecarService;
let base: string;

beforeAll(async () => {
  service = new SidecarService(CONFIG);
  const address = await service.listen();
  base = `http://${address.address}:${address.port}`;
});

afterAll(async () => {
  await service.close();
});

async function post(path: string, payload: unknown): Promise<Response> {
  return fetch(`${base}${path}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: typeof payload === "string" ? payload : JSON.stringify(payload),
  });
}

describe("healthz", () => {
  it("reports ok with model ids", async () => {
    const res = await fetch(`${base}/healthz`);
    expect(res.status).toBe(200);
    const body = await res.json();
    expect(body.status).toBe("ok");
    expect(body.models.embedding).toBe(CONFIG.embeddingModel);
    expect(body.models.ner).toBe(CONFIG.nerModel);
  });

  it("returns 503 before warmup finishes", async () => {
    let release: () => void = () => {};
    const gate = new Promise<void>((resolve) => {
      release = resolve;
    });
    const slow = new SidecarService({ ...CONFIG, port: 0 }, { warmup: () => gate });
    const listening = slow.listen();
    // the socket binds immediately; readiness waits on the warmup gate
    while (slow.server.address() === null) {
      await new Promise((r) => setTimeout(r, 5));
    }
    const address = slow.server.address() as { address: string; port: number };
    const res = await fetch(`http://${address.address}:${address.port}/healthz`);
    expect(res.status).toBe(503);
    release();
    await listening;
    const ok = await fetch(`http://${address.address}:${address.port}/healthz`);
    expect(ok.status).toBe(200);
    await slow.close();
  });
});

describe("embed", () => {
  it("returns one unit-norm vector per text, identical for identical texts", async () => {
    const res = await post("/embed", { texts: ["a", "a", "b"] });
    expect(res.status).toBe(200);
    const body = await res.json();
    expect(body.vectors).toHaveLength(3);
    expect(body.truncated).toBe(false);
    expect(body.vectors[0]).toEqual(body.vectors[1]);
    expect(body.vectors[0]).not.toEqual(body.vectors[2]);
    for (const vector of body.vectors) {
      const norm = Math.sqrt(
        vector.reduce((acc: number, v: number) => acc + v * v, 0)
      );
      expect(Math.abs(norm - 1)).toBeLessThan(1e-6);
    }
  });

  it("flags truncation for over-length texts", async () => {
    const res = await post("/embed", { texts: ["word ".repeat(100)] });
    const body = await res.json();
    expect(body.truncated).toBe(true);
  });

  it("rejects non-string items", async () => {
    const res = await post("/embed", { texts: ["ok", 5] });
    expect(res.status).toBe(400);
  });
});

describe("ner", () => {
  it("returns char-offset spans valid for the text", async () => {
    const text = "Alice met Bob in 2021.";
    const res = await post("/ner", { text });
    expect(res.status).toBe(200);
    const body = await res.json();
    expect(body.offsets).toBe("char");
    expect(body.spans.length).toBeGreaterThan(0);
    for (const span of body.spans) {
      expect(span.start).toBeGreaterThanOrEqual(0);
      expect(span.end).toBeGreaterThan(span.start);
      expect(span.end).toBeLessThanOrEqual(text.length);
      expect(typeof span.label).toBe("string");
    }
  });

  it("rejects a missing text field", async () => {
    const res = await post("/ner", { nope: 1 });
    expect(res.status).toBe(400);
  });
});

describe("score", () => {
  it("scores identity at least 0.99", async () => {
    const res = await post("/score", {
      candidate: "the quick brown fox",
      reference: "the quick brown fox",
    });
    const body = await res.json();
    expect(body.f1).toBeGreaterThanOrEqual(0.99);
  });

  it("scores disjoint texts 0", async () => {
    const res = await post("/score", { candidate: "aa bb", reference: "cc dd" });
    const body = await res.json();
    expect(body.f1).toBe(0);
  });

  it("rejects missing fields", async () => {
    const res = await post("/score", { candidate: "only one side" });
    expect(res.status).toBe(400);
  });
});

describe("protocol errors", () => {
  it("400 on malformed JSON", async () => {
    const res = await post("/embed", "{not json");
    expect(res.status).toBe(400);
  });

  it("404 on unknown endpoints", async () => {
    const res = await post("/nope", {});
    expect(res.status).toBe(404);
  });

  it("405 on wrong method", async () => {
    const res = await fetch(`${base}/embed`);
    expect(res.status).toBe(405);
  });

  it("413 on oversize bodies", async () => {
    const res = await post("/embed", { texts: ["x".repeat(8192)] });
    expect(res.status).toBe(413);
  });
});
