import { ApiClient } from "./api.js";
import { initApp } from "./ui.js";

// Backend base URL: ?backend=... query param, a global injected by the host
// page, or same-origin by default.
const params = new URLSearchParams(window.location.search);
const baseUrl =
  params.get("backend") ?? (window as { BACKEND_URL?: string }).BACKEND_URL ?? "";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

initApp(root, new ApiClient(baseUrl)).catch((err) => {
  root.textContent = `Failed to start: ${err instanceof Error ? err.message : err}`;
});
