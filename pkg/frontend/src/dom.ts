/** Tiny DOM builder: el("div", {class: "x"}, child, "text"). */

type Attrs = Record<string, string | boolean | ((event: Event) => void)>;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  ...children: (Node | string | null)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (typeof value === "function") {
      node.addEventListener(key.replace(/^on/, ""), value);
    } else if (typeof value === "boolean") {
      if (value) node.setAttribute(key, "");
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child === null) continue;
    node.append(child instanceof Node ? child : document.createTextNode(child));
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/** Singleton error banner; every surfaced failure shows its service code. */
export function showError(root: HTMLElement, code: string, message: string): void {
  const existing = root.querySelector(".error-banner");
  existing?.remove();
  root.prepend(
    el(
      "div",
      { class: "error-banner", role: "alert" },
      el("strong", {}, `[${code}] `),
      message,
    ),
  );
}

export function clearError(root: HTMLElement): void {
  root.querySelector(".error-banner")?.remove();
}
