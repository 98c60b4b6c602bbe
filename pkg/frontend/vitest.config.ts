import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the workflow suite boots the Python service and runs real jobs
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
