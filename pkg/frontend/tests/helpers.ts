import { readFileSync } from "node:fs";

import type { FetchLike } from "../src/api.js";
import { STATE_FILE } from "./globalSetup.js";

export interface ServerState {
  baseUrl: string;
  runDir: string;
  adminToken: string;
  tokens: Record<string, string>;
}

export function serverState(): ServerState {
  return JSON.parse(readFileSync(STATE_FILE, "utf-8")) as ServerState;
}

export interface RecordedExchange {
  url: string;
  requestBody: unknown;
  responseBody: unknown;
  status: number;
}

/** Wrap fetch so every judge-page exchange is captured for inspection. */
export function recordingFetch(log: RecordedExchange[]): FetchLike {
  return async (input, init) => {
    const resp = await fetch(input, init);
    const text = await resp.text();
    let responseBody: unknown = null;
    try {
      responseBody = text ? JSON.parse(text) : null;
    } catch {
      responseBody = text;
    }
    log.push({
      url: String(input),
      requestBody: init?.body ? JSON.parse(String(init.body)) : null,
      responseBody,
      status: resp.status,
    });
    // a body was consumed above; hand the caller an equivalent response
    const body = [204, 205, 304].includes(resp.status) ? null : text;
    return new Response(body, {
      status: resp.status,
      headers: { "Content-Type": resp.headers.get("content-type") ?? "application/json" },
    });
  };
}

export function collectKeys(node: unknown, into: Set<string>): void {
  if (Array.isArray(node)) {
    for (const item of node) collectKeys(item, into);
  } else if (node && typeof node === "object") {
    for (const [key, value] of Object.entries(node)) {
      into.add(key);
      collectKeys(value, into);
    }
  }
}
