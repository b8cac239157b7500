import { defineConfig } from "vitest/config";

export default defineConfig({
    test: {
        environment: "jsdom",
        include: ["tests/**/*.test.ts"],
        testTimeout: 120_000,
        hookTimeout: 180_000,
        // the suite drives one shared live service; keep tests sequential
        fileParallelism: false,
    },
});
