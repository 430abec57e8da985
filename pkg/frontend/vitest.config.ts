import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // The bundle is served same-origin (under /ui/) in production; give
    // the test DOM the service origin so fetches are same-origin here too.
    environmentOptions: {
      happyDOM: { url: "http://127.0.0.1:8799" },
    },
    globalSetup: "./tests/global-setup.ts",
    include: ["tests/**/*.test.ts"],
    testTimeout: 30_000,
    hookTimeout: 60_000,
    fileParallelism: false,
  },
});
