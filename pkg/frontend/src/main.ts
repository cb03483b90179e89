/** Entry point: ask for the session token once, keep it locally, then
 * boot the dashboard against /api/v1 on the same origin. */

import { HttpApi } from "./api.js";
import { Dashboard } from "./dashboard.js";
import { el } from "./dom.js";
import { LayoutStore } from "./layout.js";

const TOKEN_KEY = "hems.token";

function tokenForm(onToken: (token: string) => void): HTMLElement {
  const input = el("input", {
    type: "password",
    placeholder: "session token",
    class: "token-input",
  });
  const button = el("button", { class: "token-submit" }, "Connect");
  const form = el(
    "form",
    { class: "token-form" },
    el("p", {}, "Enter the private token from your gateway configuration."),
    input,
    button,
  );
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (input.value.trim()) onToken(input.value.trim());
  });
  return form;
}

export function boot(root: HTMLElement, storage: Storage = window.localStorage): void {
  const start = (token: string): void => {
    storage.setItem(TOKEN_KEY, token);
    const api = new HttpApi(token);
    const dashboard = new Dashboard(api, new LayoutStore(storage), root);
    dashboard.render();
  };
  const saved = storage.getItem(TOKEN_KEY);
  if (saved) {
    start(saved);
  } else {
    root.replaceChildren(tokenForm(start));
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(document.getElementById("app") as HTMLElement);
}
