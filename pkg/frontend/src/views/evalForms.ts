/**
 * Evaluation entry forms. The graded form refuses partial rubric
 * submissions client-side (the service rejects them too); the pairwise
 * form renders only the blinded labels and contents the service returns,
 * so model identities never reach the DOM. All randomization and scoring
 * stays server-side.
 */

import { ApiClient, BlindedPairView, RubricCategory, ServiceError } from "../api.js";
import { clear, clearError, el, showError } from "../dom.js";
import { loadRaterId, saveRaterId } from "../state.js";

function raterField(): HTMLInputElement {
  const input = el("input", {
    class: "rater-id",
    placeholder: "rater id",
    value: loadRaterId(),
  });
  input.addEventListener("change", () => saveRaterId(input.value.trim()));
  return input;
}

export function renderGradedForm(
  root: HTMLElement,
  api: ApiClient,
  categories: RubricCategory[],
  scaleMin = 1,
  scaleMax = 5,
): void {
  clear(root);
  const rater = raterField();
  const artifactBox = el("input", { class: "graded-artifact-id", placeholder: "artifact id" });
  const submit = el("button", { class: "graded-submit", disabled: true }, "Submit scores");
  const status = el("p", { class: "graded-status" });
  const table = el("div", { class: "rubric-table" });

  const chosen = new Map<string, number>();

  function refresh(): void {
    const complete = chosen.size === categories.length && rater.value.trim() !== "" && artifactBox.value.trim() !== "";
    if (complete) submit.removeAttribute("disabled");
    else submit.setAttribute("disabled", "");
  }
  rater.addEventListener("input", refresh);
  artifactBox.addEventListener("input", refresh);

  for (const category of categories) {
    const row = el(
      "div",
      { class: "rubric-row", "data-category": category.name },
      el("span", { class: "rubric-name", title: category.descriptor }, category.name),
    );
    for (let score = scaleMin; score <= scaleMax; score++) {
      const radio = el("input", {
        type: "radio",
        name: `score-${category.name}`,
        value: String(score),
        "aria-label": `${category.name} ${score}`,
      }) as HTMLInputElement;
      radio.addEventListener("change", () => {
        chosen.set(category.name, score);
        refresh();
      });
      row.append(el("label", { class: "score-option" }, radio, String(score)));
    }
    table.append(row);
  }

  submit.addEventListener("click", async () => {
    clearError(root);
    status.textContent = "";
    try {
      await api.submitGraded(artifactBox.value.trim(), rater.value.trim(), Object.fromEntries(chosen));
      status.textContent = "recorded";
    } catch (err) {
      if (err instanceof ServiceError) showError(root, err.code, err.message);
      else throw err;
    }
  });

  root.append(el("div", { class: "graded-controls" }, rater, artifactBox), table, submit, status);
}

export function renderPairwiseForm(root: HTMLElement, api: ApiClient): void {
  clear(root);
  const rater = raterField();
  const firstBox = el("input", { class: "pair-first", placeholder: "first artifact id" });
  const secondBox = el("input", { class: "pair-second", placeholder: "second artifact id" });
  const fetchButton = el("button", { class: "pair-fetch" }, "Fetch blinded pair");
  const arena = el("div", { class: "pair-arena" });
  const status = el("p", { class: "pair-status" });

  let pair: BlindedPairView | null = null;

  async function vote(winner: "A" | "B" | "TIE"): Promise<void> {
    if (!pair) return;
    clearError(root);
    try {
      await api.submitVote(pair.pair_id, winner, rater.value.trim());
      status.textContent = "vote recorded";
      pair = null;
      clear(arena);
    } catch (err) {
      if (err instanceof ServiceError) showError(root, err.code, err.message);
      else throw err;
    }
  }

  fetchButton.addEventListener("click", async () => {
    clearError(root);
    status.textContent = "";
    clear(arena);
    try {
      pair = await api.makePair([firstBox.value.trim(), secondBox.value.trim()]);
      const columns = el("div", { class: "pair-columns" });
      for (const output of pair.outputs) {
        columns.append(
          el(
            "section",
            { class: "pair-output" },
            el("h3", { class: "pair-label" }, output.label),
            el("pre", { class: "pair-content" }, output.content),
          ),
        );
      }
      const buttons = el(
        "div",
        { class: "pair-buttons" },
        el("button", { class: "vote-a", onclick: () => void vote("A") }, "Output A wins"),
        el("button", { class: "vote-b", onclick: () => void vote("B") }, "Output B wins"),
        el("button", { class: "vote-tie", onclick: () => void vote("TIE") }, "Tie"),
      );
      arena.append(columns, buttons);
    } catch (err) {
      if (err instanceof ServiceError) showError(root, err.code, err.message);
      else throw err;
    }
  });

  root.append(el("div", { class: "pair-controls" }, rater, firstBox, secondBox, fetchButton), arena, status);
}
