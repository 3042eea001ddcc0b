/**
 * HTTP surface of the parse service.
 *
 * POST /parse  {"sentence": string} -> 200 {"tokens": [{"text","pos","dep"}]}
 *              malformed body -> 400, parse failure -> 422, body > 16 KiB -> 413
 * GET  /health -> 200 {"status": "ok", "model": string}
 *
 * Stateless per request and safe under concurrent load; identical sentences
 * always produce identical responses within one process.
 */

import express, { Express, NextFunction, Request, Response } from "express";

import { parseSentence } from "./tagger.js";

export const BODY_LIMIT = "16kb";

export function createApp(modelName: string): Express {
  const app = express();
  app.use(express.json({ limit: BODY_LIMIT }));

  app.get("/health", (_req: Request, res: Response) => {
    res.json({ status: "ok", model: modelName });
  });

  app.post("/parse", (req: Request, res: Response) => {
    const body = req.body;
    if (typeof body !== "object" || body === null || typeof body.sentence !== "string") {
      res.status(400).json({ error: "body must be {\"sentence\": string}" });
      return;
    }
    try {
      res.json({ tokens: parseSentence(body.sentence) });
    } catch (err) {
      res.status(422).json({ error: err instanceof Error ? err.message : String(err) });
    }
  });

  // express raises on oversized or unparseable bodies before the route runs
  app.use((err: Error & { type?: string; status?: number }, _req: Request, res: Response, next: NextFunction) => {
    if (res.headersSent) {
      next(err);
      return;
    }
    if (err.type === "entity.too.large") {
      res.status(413).json({ error: `request body exceeds ${BODY_LIMIT}` });
      return;
    }
    res.status(400).json({ error: err.message });
  });

  return app;
}
