/**
 * Chat view: pipeline/model selectors, query box, exchanges with an
 * expandable grounding panel. The grounding list renders exactly the
 * chunk ids from the service response; chunk text and source titles are
 * fetched on expand, never synthesized.
 */

import { ApiClient, ServiceError } from "../api.js";
import { clear, clearError, el, showError } from "../dom.js";
import { UiSession } from "../state.js";

export function renderChatView(
  root: HTMLElement,
  api: ApiClient,
  session: UiSession,
  models: string[],
): void {
  clear(root);
  if (!session.model && models.length) session.model = models[0];

  const pipelineSelect = el("select", { class: "pipeline-select", "aria-label": "pipeline" });
  for (const pipeline of ["advanced", "graph"]) {
    pipelineSelect.append(el("option", { value: pipeline }, pipeline));
  }
  pipelineSelect.value = session.pipeline;
  pipelineSelect.addEventListener("change", () => {
    session.pipeline = pipelineSelect.value;
  });

  const modelSelect = el("select", { class: "model-select", "aria-label": "model" });
  for (const model of models) {
    modelSelect.append(el("option", { value: model }, model));
  }
  if (session.model) modelSelect.value = session.model;
  modelSelect.addEventListener("change", () => {
    session.model = modelSelect.value;
  });

  const queryBox = el("textarea", {
    class: "query-box",
    rows: "2",
    placeholder: "Ask a question about the corpus…",
  });
  const askButton = el("button", { class: "ask-button" }, "Ask");
  const historyList = el("div", { class: "chat-history" });

  askButton.addEventListener("click", async () => {
    const query = queryBox.value.trim();
    if (!query) return;
    askButton.setAttribute("disabled", "");
    clearError(root);
    try {
      const resp = await api.query(query, session.pipeline, 5, session.model);
      session.append({
        query,
        pipeline: session.pipeline,
        model: session.model,
        answer: resp.answer,
        grounding: resp.grounding,
      });
      historyList.append(renderExchange(api, root, query, session.pipeline, resp.answer, resp.grounding));
      queryBox.value = "";
    } catch (err) {
      if (err instanceof ServiceError) showError(root, err.code, err.message);
      else throw err;
    } finally {
      askButton.removeAttribute("disabled");
    }
  });

  root.append(
    el("div", { class: "chat-controls" }, pipelineSelect, modelSelect, queryBox, askButton),
    historyList,
  );
}

function renderExchange(
  api: ApiClient,
  root: HTMLElement,
  query: string,
  pipeline: string,
  answer: string,
  grounding: string[],
): HTMLElement {
  const panel = el("ul", { class: "grounding-panel" });
  for (const chunkId of grounding) {
    const item = el(
      "li",
      { class: "grounding-item", "data-chunk-id": chunkId },
      el("code", {}, chunkId),
    );
    item.addEventListener("click", async () => {
      if (item.querySelector(".chunk-text")) return;
      try {
        const chunk = await api.chunk(chunkId);
        item.append(
          el("div", { class: "chunk-source" }, chunk.doc_title),
          el("blockquote", { class: "chunk-text" }, chunk.text),
        );
      } catch (err) {
        if (err instanceof ServiceError) showError(root, err.code, err.message);
        else throw err;
      }
    });
    panel.append(item);
  }
  return el(
    "section",
    { class: "exchange", "data-pipeline": pipeline },
    el("p", { class: "exchange-query" }, query),
    el("p", { class: "exchange-answer" }, answer),
    el("details", { class: "exchange-grounding" }, el("summary", {}, `grounding (${grounding.length})`), panel),
  );
}
