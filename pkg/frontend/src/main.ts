/** App shell: tab navigation plus service bootstrap. */

import { ApiClient, ModelsInfo, ServiceError } from "./api.js";
import { clear, el, showError } from "./dom.js";
import { UiSession } from "./state.js";
import { renderChatView } from "./views/chat.js";
import { renderGradedForm, renderPairwiseForm } from "./views/evalForms.js";
import { renderOutputsView } from "./views/outputs.js";

const TABS = ["Chat", "Artifacts", "Grade", "Compare"] as const;
type Tab = (typeof TABS)[number];

export function bootApp(root: HTMLElement, api: ApiClient): void {
  clear(root);
  const session = new UiSession();
  const nav = el("nav", { class: "tabs" });
  const view = el("main", { class: "view" });
  root.append(el("h1", {}, "studyforge"), nav, view);

  let models: ModelsInfo | null = null;

  function activate(tab: Tab): void {
    for (const button of nav.querySelectorAll("button")) {
      button.classList.toggle("active", button.textContent === tab);
    }
    clear(view);
    if (!models) return;
    if (tab === "Chat") renderChatView(view, api, session, models.generators);
    if (tab === "Artifacts") renderOutputsView(view, api);
    if (tab === "Grade") renderGradedForm(view, api, models.rubric_categories);
    if (tab === "Compare") renderPairwiseForm(view, api);
  }

  for (const tab of TABS) {
    const button = el("button", { class: "tab-button" }, tab);
    button.addEventListener("click", () => activate(tab));
    nav.append(button);
  }

  api
    .models()
    .then((info) => {
      models = info;
      activate("Chat");
    })
    .catch((err) => {
      if (err instanceof ServiceError) showError(root, err.code, err.message);
      else throw err;
    });
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootApp(document.getElementById("app") as HTMLElement, new ApiClient(""));
}
