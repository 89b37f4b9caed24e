/** Shell and hash router.
 *
 * Views are built detached and swapped into <main> in one step, so a
 * failed fetch never leaves a partially updated page: on error the
 * content area is cleared and the banner shows what happened.
 */

import { ApiClient } from "./api.js";
import { AppContext } from "./context.js";
import { describeError, el } from "./dom.js";
import { buildReportList } from "./reportList.js";
import { buildReportView } from "./reportView.js";
import { buildSynonymView } from "./synonymView.js";

export type Route =
  | { view: "reports" }
  | { view: "report"; name: string }
  | { view: "synonyms" };

export function parseRoute(hash: string): Route {
  const parts = hash
    .replace(/^#\/?/, "")
    .split("/")
    .filter((part) => part.length > 0);
  if (parts[0] === "synonyms") {
    return { view: "synonyms" };
  }
  if (parts[0] === "reports" && parts[1]) {
    return { view: "report", name: decodeURIComponent(parts[1]) };
  }
  return { view: "reports" };
}

export interface AppHandle {
  root: HTMLElement;
  ctx: AppContext;
  render(): Promise<void>;
  navigate(hash: string): Promise<void>;
}

export function mount(root: HTMLElement, client: ApiClient): AppHandle {
  const banner = el("div", { class: "banner", role: "alert" });
  banner.hidden = true;
  const ctx: AppContext = {
    client,
    showError(message: string) {
      banner.textContent = message;
      banner.hidden = false;
    },
    clearError() {
      banner.textContent = "";
      banner.hidden = true;
    },
  };

  const main = el("main", {});
  root.replaceChildren(
    el(
      "header",
      {},
      el("h1", {}, "Proof check reports"),
      el(
        "nav",
        {},
        el("a", { href: "#/reports" }, "Reports"),
        " ",
        el("a", { href: "#/synonyms" }, "Synonyms"),
      ),
    ),
    banner,
    main,
  );

  let startedFor: string | null = null;
  let renderSeq = 0;

  async function render(): Promise<void> {
    startedFor = location.hash;
    const seq = ++renderSeq;
    const route = parseRoute(location.hash);
    try {
      let view: HTMLElement;
      if (route.view === "synonyms") {
        view = await buildSynonymView(ctx);
      } else if (route.view === "report") {
        view = await buildReportView(ctx, route.name);
      } else {
        view = await buildReportList(ctx);
      }
      if (seq !== renderSeq) {
        return;
      }
      ctx.clearError();
      main.replaceChildren(view);
    } catch (error) {
      if (seq !== renderSeq) {
        return;
      }
      main.replaceChildren();
      ctx.showError(describeError(error));
    }
  }

  window.addEventListener("hashchange", () => {
    if (location.hash === startedFor) {
      return;
    }
    void render();
  });

  async function navigate(hash: string): Promise<void> {
    location.hash = hash;
    await render();
  }

  return { root, ctx, render, navigate };
}
