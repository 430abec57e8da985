import { describe, expect, it } from "vitest";

import { ApiClient, ServiceError } from "../src/api.js";
import { bootApp } from "../src/main.js";
import { eventually, liveApi, mount } from "./helpers.js";

describe("api client (live service)", () => {
  it("exposes structured error codes", async () => {
    const { api } = liveApi();
    const err = await api.query("x", "bogus", 3, "mock-gpt").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.code).toBe("bad_pipeline");
    expect(err.status).toBe(400);
  });

  it("reports network failures with a network_error code", async () => {
    const dead = new ApiClient("http://127.0.0.1:9");
    const err = await dead.models().catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.code).toBe("network_error");
  });

  it("boots the app shell against the live service", async () => {
    const { api } = liveApi();
    const root = mount();
    bootApp(root, api);
    await eventually(() => {
      if (!root.querySelector(".query-box")) throw new Error("chat tab not active yet");
    });
    const tabs = [...root.querySelectorAll(".tab-button")].map((n) => n.textContent);
    expect(tabs).toEqual(["Chat", "Artifacts", "Grade", "Compare"]);
  });

  it("shows an offline banner when the service is unreachable", async () => {
    const root = mount();
    bootApp(root, new ApiClient("http://127.0.0.1:9"));
    await eventually(() => {
      if (!root.querySelector(".error-banner")) throw new Error("no banner");
    });
    expect(root.querySelector(".error-banner")!.textContent).toContain("network_error");
  });
});
