import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // the UI is served from the same origin as the API in production;
    // mirror that so happy-dom's same-origin policy allows the calls
    // (port must match PORT in tests/globalSetup.ts)
    environmentOptions: { happyDOM: { url: "http://127.0.0.1:8931" } },
    globalSetup: "./tests/globalSetup.ts",
    fileParallelism: false, // tests share one live judging service
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
