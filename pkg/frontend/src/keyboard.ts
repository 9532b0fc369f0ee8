/** Bind single-key shortcuts; returns an unbind function.
 * Keys are ignored while an input element has focus. */
export function bindKeys(bindings: Record<string, () => void>): () => void {
  const handler = (event: KeyboardEvent) => {
    const target = event.target as HTMLElement | null;
    if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
    const action = bindings[event.key.toLowerCase()];
    if (action) {
      event.preventDefault();
      action();
    }
  };
  window.addEventListener("keydown", handler);
  return () => window.removeEventListener("keydown", handler);
}
