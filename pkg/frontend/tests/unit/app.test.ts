import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../../src/api.js";
import { mount, parseRoute } from "../../src/app.js";
import { emptyReport, scriptedFetch } from "./helpers.js";

function freshRoot(): HTMLElement {
  const root = document.createElement("div");
  root.id = "app";
  document.body.replaceChildren(root);
  return root;
}

beforeEach(() => {
  location.hash = "";
});

describe("routes", () => {
  it("maps hashes to views", () => {
    expect(parseRoute("")).toEqual({ view: "reports" });
    expect(parseRoute("#/")).toEqual({ view: "reports" });
    expect(parseRoute("#/reports")).toEqual({ view: "reports" });
    expect(parseRoute("#/reports/ANA-EXOT-2020-01_proof_v1")).toEqual({
      view: "report",
      name: "ANA-EXOT-2020-01_proof_v1",
    });
    expect(parseRoute("#/reports/a%20b")).toEqual({ view: "report", name: "a b" });
    expect(parseRoute("#/synonyms")).toEqual({ view: "synonyms" });
    expect(parseRoute("#/nonsense")).toEqual({ view: "reports" });
  });
});

describe("shell", () => {
  it("renders the report index and follows a report route", async () => {
    const report = emptyReport();
    const { fetchFn } = scriptedFetch((url) => {
      if (url === "/api/reports") {
        return {
          status: 200,
          body: {
            reports: [
              {
                name: "ANA-EXOT-2020-01_proof_v1",
                ref_code: "ANA-EXOT-2020-01",
                filename: "proof_v1",
                creation_date: "29-Oct-2018",
              },
            ],
          },
        };
      }
      if (url === "/api/reports/ANA-EXOT-2020-01_proof_v1") {
        return { status: 200, body: report };
      }
      return undefined;
    });
    const app = mount(freshRoot(), new ApiClient("", fetchFn));

    await app.navigate("#/reports");
    const link = app.root.querySelector<HTMLAnchorElement>(".report-list a")!;
    expect(link.textContent).toBe("ANA-EXOT-2020-01_proof_v1");
    expect(link.getAttribute("href")).toBe(
      "#/reports/ANA-EXOT-2020-01_proof_v1",
    );

    await app.navigate("#/reports/ANA-EXOT-2020-01_proof_v1");
    const article = app.root.querySelector("article.report")!;
    expect(article.getAttribute("data-name")).toBe("ANA-EXOT-2020-01_proof_v1");
    expect(article.querySelectorAll("section.category")).toHaveLength(11);
  });

  it("shows the empty index message", async () => {
    const { fetchFn } = scriptedFetch(() => ({ status: 200, body: { reports: [] } }));
    const app = mount(freshRoot(), new ApiClient("", fetchFn));
    await app.navigate("#/reports");
    expect(app.root.querySelector(".report-list .empty")!.textContent).toBe(
      "no reports yet",
    );
  });

  it("swaps in the synonym view", async () => {
    const { fetchFn } = scriptedFetch((url) =>
      url.startsWith("/api/synonyms?")
        ? { status: 200, body: { institutes: [], authors: [] } }
        : undefined,
    );
    const app = mount(freshRoot(), new ApiClient("", fetchFn));
    await app.navigate("#/synonyms");
    expect(app.root.querySelector("section.synonyms")).not.toBeNull();
    expect(app.root.querySelector("input.search")).not.toBeNull();
  });

  it("answers a failing fetch with the banner and no stale content", async () => {
    let healthy = true;
    const report = emptyReport();
    const { fetchFn } = scriptedFetch((url) => {
      if (url === "/api/reports/ANA-EXOT-2020-01_proof_v1" && healthy) {
        return { status: 200, body: report };
      }
      if (!healthy) {
        return { status: 500, body: { error: "recheck failed: boom" } };
      }
      return undefined;
    });
    const app = mount(freshRoot(), new ApiClient("", fetchFn));

    await app.navigate("#/reports/ANA-EXOT-2020-01_proof_v1");
    expect(app.root.querySelector("article.report")).not.toBeNull();
    const banner = app.root.querySelector<HTMLElement>(".banner")!;
    expect(banner.hidden).toBe(true);

    healthy = false;
    await app.render();
    expect(banner.hidden).toBe(false);
    expect(banner.textContent).toBe("recheck failed: boom");
    expect(app.root.querySelector("article.report")).toBeNull();
    expect(app.root.querySelector("main")!.children).toHaveLength(0);
  });
});
