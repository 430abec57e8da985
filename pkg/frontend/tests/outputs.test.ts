import { describe, expect, it } from "vitest";

import { Artifact } from "../src/api.js";
import { renderArtifact, renderOutputsView, renderPodcast, renderSlideDeck } from "../src/views/outputs.js";
import { eventually, liveApi, mount } from "./helpers.js";

describe("output renderers (pure)", () => {
  it("renders slide cards in order", () => {
    const deck = renderSlideDeck([
      { title: "One", bullets: ["a", "b"] },
      { title: "Two", bullets: ["c"] },
      { title: "Three", bullets: ["d"] },
    ]);
    const titles = [...deck.querySelectorAll(".slide-title")].map((n) => n.textContent);
    expect(titles).toEqual(["One", "Two", "Three"]);
    expect(deck.querySelectorAll(".slide-bullet")).toHaveLength(4);
  });

  it("alternating podcast turns get left/right layout", () => {
    const transcript = renderPodcast([
      { speaker: "HOST", line: "q1" },
      { speaker: "EXPERT", line: "a1" },
      { speaker: "HOST", line: "q2" },
      { speaker: "EXPERT", line: "a2" },
    ]);
    const sides = [...transcript.querySelectorAll(".podcast-turn")].map((n) =>
      n.classList.contains("speaker-left") ? "L" : "R",
    );
    expect(sides).toEqual(["L", "R", "L", "R"]);
  });
});

describe("artifact viewers (live service)", () => {
  it("renders a slides artifact as cards", async () => {
    const { api, info } = liveApi();
    const artifact = await api.artifact(info.slides);
    const node = renderArtifact(artifact as Artifact);
    expect(node.querySelectorAll(".slide-card").length).toBeGreaterThanOrEqual(3);
  });

  it("renders a podcast artifact as an alternating transcript", async () => {
    const { api, info } = liveApi();
    const artifact = await api.artifact(info.podcast);
    const node = renderArtifact(artifact as Artifact);
    const turns = node.querySelectorAll(".podcast-turn");
    expect(turns.length).toBeGreaterThanOrEqual(6);
    expect(turns[0].querySelector(".speaker-tag")!.textContent).toBe("HOST");
  });

  it("renders a summary artifact as sections", async () => {
    const { api, info } = liveApi();
    const artifact = await api.artifact(info.summary);
    const node = renderArtifact(artifact as Artifact);
    const headings = [...node.querySelectorAll(".summary-heading")].map((n) => n.textContent);
    expect(headings).toEqual(["Background", "Methods", "Findings", "Implications"]);
  });

  it("surfaces a 404 for a malformed artifact id in the browser view", async () => {
    const { api } = liveApi();
    const root = mount();
    renderOutputsView(root, api);
    const box = root.querySelector<HTMLInputElement>(".artifact-id-box")!;
    box.value = "not-a-real-artifact";
    root.querySelector<HTMLButtonElement>(".open-artifact")!.click();
    await eventually(() => {
      if (!root.querySelector(".error-banner")) throw new Error("no banner yet");
    });
    expect(root.querySelector(".error-banner")!.textContent).toContain("not_found");
  });

  it("lists stored artifacts for browsing", async () => {
    const { api } = liveApi();
    const root = mount();
    renderOutputsView(root, api);
    await eventually(() => {
      if (root.querySelectorAll(".artifact-entry").length < 5) throw new Error("listing not loaded");
    });
  });
});
