import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    // `npm run dev` next to `annotweave serve` on the default port
    proxy: {
      "/projects": "http://127.0.0.1:8077",
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
