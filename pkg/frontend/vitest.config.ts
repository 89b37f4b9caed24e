import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the live-service suite compiles fixtures and spawns a server
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
