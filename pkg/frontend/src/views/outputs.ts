/**
 * Artifact viewers: slide decks as titled bullet cards, podcasts as an
 * alternating-speaker transcript, summaries as sectioned text. Pure
 * renders of the artifact JSON; invalid artifacts surface the service
 * error verbatim.
 */

import { ApiClient, Artifact, PodcastTurn, ServiceError, Slide } from "../api.js";
import { clear, clearError, el, showError } from "../dom.js";

export function renderSlideDeck(slides: Slide[]): HTMLElement {
  const deck = el("div", { class: "slide-deck" });
  for (const slide of slides) {
    deck.append(
      el(
        "article",
        { class: "slide-card" },
        el("h3", { class: "slide-title" }, slide.title),
        el("ul", {}, ...slide.bullets.map((b) => el("li", { class: "slide-bullet" }, b))),
      ),
    );
  }
  return deck;
}

export function renderPodcast(turns: PodcastTurn[]): HTMLElement {
  const transcript = el("div", { class: "podcast-transcript" });
  const firstSpeaker = turns.length ? turns[0].speaker : "";
  for (const turn of turns) {
    const side = turn.speaker === firstSpeaker ? "speaker-left" : "speaker-right";
    transcript.append(
      el(
        "div",
        { class: `podcast-turn ${side}` },
        el("span", { class: "speaker-tag" }, turn.speaker),
        el("p", {}, turn.line),
      ),
    );
  }
  return transcript;
}

export function renderSummary(markdown: string): HTMLElement {
  const container = el("div", { class: "summary-sections" });
  for (const block of markdown.split(/\n{2,}/)) {
    const text = block.trim();
    if (!text) continue;
    if (text.startsWith("## ")) {
      const [heading, ...rest] = text.split("\n");
      container.append(el("h3", { class: "summary-heading" }, heading.slice(3)));
      if (rest.length) container.append(el("p", {}, rest.join(" ")));
    } else {
      container.append(el("p", {}, text));
    }
  }
  return container;
}

export function renderArtifact(artifact: Artifact): HTMLElement {
  const parsed = artifact.parsed;
  if (typeof parsed === "string") {
    return artifact.kind === "summary" ? renderSummary(parsed) : el("p", { class: "qa-answer" }, parsed);
  }
  if ("slides" in parsed) return renderSlideDeck(parsed.slides);
  return renderPodcast(parsed.turns);
}

export function renderOutputsView(root: HTMLElement, api: ApiClient): void {
  clear(root);
  const idBox = el("input", { class: "artifact-id-box", placeholder: "artifact id" });
  const openButton = el("button", { class: "open-artifact" }, "Open");
  const listing = el("div", { class: "artifact-listing" });
  const viewer = el("div", { class: "artifact-viewer" });

  async function open(artifactId: string): Promise<void> {
    clearError(root);
    clear(viewer);
    try {
      const artifact = await api.artifact(artifactId);
      viewer.append(
        el("h2", { class: "artifact-kind" }, artifact.kind),
        renderArtifact(artifact),
      );
    } catch (err) {
      if (err instanceof ServiceError) showError(root, err.code, err.message);
      else throw err;
    }
  }

  openButton.addEventListener("click", () => void open(idBox.value.trim()));

  api
    .artifacts()
    .then((rows) => {
      for (const row of rows) {
        const entry = el(
          "button",
          { class: "artifact-entry", "data-artifact-id": row.artifact_id },
          `${row.kind} · ${row.artifact_id}`,
        );
        entry.addEventListener("click", () => void open(row.artifact_id));
        listing.append(entry);
      }
    })
    .catch((err) => {
      if (err instanceof ServiceError) showError(root, err.code, err.message);
    });

  root.append(el("div", { class: "outputs-controls" }, idBox, openButton), listing, viewer);
}
