import { defineConfig } from "vite";

export default defineConfig({
  build: {
    outDir: "dist",
  },
  server: {
    proxy: {
      // during development the API runs separately (souschef serve)
      "/api": "http://127.0.0.1:8080",
    },
  },
});
