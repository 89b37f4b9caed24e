/** DOM construction helpers.
 *
 * All text lands in the tree through createTextNode, so names and
 * report details are escaped by construction no matter what Unicode
 * they carry.
 */

export type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  for (const child of children) {
    node.appendChild(
      typeof child === "string" ? document.createTextNode(child) : child,
    );
  }
  return node;
}

export function text(value: string): Text {
  return document.createTextNode(value);
}

export function describeError(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
