import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { ApiClient } from "../src/api.js";

export interface ServiceInfo {
  base: string;
  qaAdvanced: string;
  qaGraph: string;
  slides: string;
  podcast: string;
  summary: string;
}

export function serviceInfo(): ServiceInfo {
  const here = dirname(fileURLToPath(import.meta.url));
  return JSON.parse(readFileSync(join(here, ".service-info.json"), "utf-8"));
}

export function liveApi(): { api: ApiClient; info: ServiceInfo } {
  const info = serviceInfo();
  return { api: new ApiClient(info.base), info };
}

export function mount(): HTMLElement {
  document.body.innerHTML = "";
  const root = document.createElement("div");
  document.body.append(root);
  return root;
}

export function flush(ms = 20): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Wait until `check` stops throwing, for async DOM updates. */
export async function eventually(check: () => void, timeoutMs = 5000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown;
  while (Date.now() < deadline) {
    try {
      check();
      return;
    } catch (err) {
      lastError = err;
      await flush(50);
    }
  }
  throw lastError;
}
