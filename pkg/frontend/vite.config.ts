import { defineConfig } from "vite";

// The console is static; API calls go to the session server, which is
// a separate process. During development the /sessions routes are
// proxied to it so the page and the API share an origin.
export default defineConfig({
  server: {
    port: 5173,
    proxy: {
      "/sessions": {
        target: process.env.IGP_API ?? "http://127.0.0.1:8008",
        changeOrigin: true,
      },
    },
  },
  test: {
    environment: "jsdom",
  },
});
