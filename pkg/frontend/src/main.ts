import { MonitorApi } from "./api.js";
import { EditorApp } from "./app.js";

const base =
  new URLSearchParams(window.location.search).get("service") ??
  "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (root) {
  new EditorApp(root, new MonitorApi(base)).start();
}
