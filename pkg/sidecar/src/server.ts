/**
 * HTTP service exposing the measurement wire protocol:
 *
 *   POST /embed  {"texts": [...]}                    -> {"vectors": [[...], ...], "truncated": bool}
 *   POST /ner    {"text": "..."}                     -> {"spans": [{start,end,label}], "offsets": "char", "truncated": bool}
 *   POST /score  {"candidate": "...", "reference": "..."} -> {"f1": number, "truncated": bool}
 *   GET  /healthz                                    -> {"status": "ok", "models": {...}}
 *
 * 400 on malformed bodies, 413 on oversize requests, 503 until warmup
 * finishes. Inference is synchronous on the event loop, so requests are
 * serialized per process; no extra locking is needed.
 */

import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";
import type { AddressInfo } from "node:net";

import { SidecarConfig, validate } from "./config.js";
import { embedBatch } from "./embedding.js";
import { entities } from "./ner.js";
import { tokenF1 } from "./score.js";

interface ServiceOptions {
  /** Test hook: replaces the (instant) default model warmup. */
  warmup?: () => Promise<void>;
}

function sendJson(res: ServerResponse, status: number, payload: unknown): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json; charset=utf-8",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

class BodyTooLarge extends Error {}

function readBody(req: IncomingMessage, maxBytes: number): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const declared = Number(req.headers["content-length"] ?? 0);
    if (declared > maxBytes) {
      reject(new BodyTooLarge(`declared ${declared} bytes`));
      return;
    }
    const chunks: Buffer[] = [];
    let total = 0;
    req.on("data", (chunk: Buffer) => {
      total += chunk.length;
      if (total > maxBytes) {
        req.destroy();
        reject(new BodyTooLarge(`body exceeded ${maxBytes} bytes`));
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

export class SidecarService {
  readonly config: SidecarConfig;
  readonly server: Server;
  ready = false;
  private readonly warmup: () => Promise<void>;

  constructor(config: SidecarConfig, options: ServiceOptions = {}) {
    this.config = validate(config);
    this.warmup =
      options.warmup ??
      (async () => {
        embedBatch(["warmup"], this.config.embeddingModel, this.config.batchSize);
        entities("Warmup 2024", this.config.nerModel);
      });
    this.server = createServer((req, res) => {
      void this.handle(req, res);
    });
  }

  /** Bind the socket, run warmup, and only then report ready. */
  async listen(): Promise<AddressInfo> {
    await new Promise<void>((resolve, reject) => {
      this.server.once("error", reject);
      this.server.listen(this.config.port, this.config.host, resolve);
    });
    await this.warmup();
    this.ready = true;
    return this.server.address() as AddressInfo;
  }

  async close(): Promise<void> {
    await new Promise<void>((resolve, reject) => {
      this.server.close((err) => (err ? reject(err) : resolve()));
    });
  }

  /** Cut to the configured character budget, flagging when anything was lost. */
  private clip(text: string): { text: string; truncated: boolean } {
    const chars = [...text];
    if (chars.length <= this.config.maxTextLength) {
      return { text, truncated: false };
    }
    return { text: chars.slice(0, this.config.maxTextLength).join(""), truncated: true };
  }

  async handle(req: IncomingMessage, res: ServerResponse): Promise<void> {
    const url = (req.url ?? "/").split("?")[0];
    const known = new Set(["/embed", "/ner", "/score", "/healthz"]);
    if (!known.has(url)) {
      sendJson(res, 404, { error: `no such endpoint: ${url}` });
      return;
    }
    const wantMethod = url === "/healthz" ? "GET" : "POST";
    if (req.method !== wantMethod) {
      sendJson(res, 405, { error: `${url} expects ${wantMethod}` });
      return;
    }
    if (!this.ready) {
      sendJson(res, 503, { status: "loading" });
      return;
    }
    if (url === "/healthz") {
      sendJson(res, 200, {
        status: "ok",
        models: {
          embedding: this.config.embeddingModel,
          ner: this.config.nerModel,
        },
      });
      return;
    }

    let payload: unknown;
    try {
      const body = await readBody(req, this.config.maxBodyBytes);
      payload = JSON.parse(body.toString("utf-8"));
    } catch (err) {
      if (err instanceof BodyTooLarge) {
        sendJson(res, 413, { error: err.message });
      } else {
        sendJson(res, 400, { error: "body is not valid JSON" });
      }
      return;
    }
    if (typeof payload !== "object" || payload === null || Array.isArray(payload)) {
      sendJson(res, 400, { error: "body must be a JSON object" });
      return;
    }
    const body = payload as Record<string, unknown>;

    if (url === "/embed") {
      const texts = body.texts;
      if (!Array.isArray(texts) || texts.some((t) => typeof t !== "string")) {
        sendJson(res, 400, { error: "texts must be an array of strings" });
        return;
      }
      let truncated = false;
      const clipped = (texts as string[]).map((text) => {
        const cut = this.clip(text);
        truncated = truncated || cut.truncated;
        return cut.text;
      });
      const vectors = embedBatch(
        clipped,
        this.config.embeddingModel,
        this.config.batchSize
      );
      sendJson(res, 200, { vectors, truncated });
      return;
    }

    if (url === "/ner") {
      if (typeof body.text !== "string") {
        sendJson(res, 400, { error: "text must be a string" });
        return;
      }
      const cut = this.clip(body.text);
      sendJson(res, 200, {
        spans: entities(cut.text, this.config.nerModel),
        offsets: "char",
        truncated: cut.truncated,
      });
      return;
    }

    if (typeof body.candidate !== "string" || typeof body.reference !== "string") {
      sendJson(res, 400, { error: "candidate and reference must be strings" });
      return;
    }
    const cand = this.clip(body.candidate);
    const ref = this.clip(body.reference);
    sendJson(res, 200, {
      f1: tokenF1(cand.text, ref.text),
      truncated: cand.truncated || ref.truncated,
    });
  }
}
