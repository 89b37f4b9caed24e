/** Drives the built UI against a real service instance.
 *
 * The suite prepares a working directory from the bundled fixtures,
 * generates the stored report through the command line, starts the
 * service on a local port, and then operates the mounted app the way
 * a reviewer would: search, edit, re-run, toggle. Everything the app
 * shows must come over HTTP from that process.
 */

import { ChildProcess, spawn, spawnSync } from "node:child_process";
import fs from "node:fs";
import os from "node:os";
import path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../../src/api.js";
import { AppHandle, mount } from "../../src/app.js";

// vitest runs with the package root as working directory
const FIXTURES = path.resolve("tests/e2e/fixtures");
const DIST = path.resolve("dist");

const REF_CODE = "ANA-TOPQ-2020-07";
const REPORT_NAME = `${REF_CODE}_proof_v1`;
const ALBERTA = "Department of Physics, University of Alberta, Edmonton AB, Canada";
const MISSPELLING = "Universily of Alberta, Edmonton";

let tmp: string;
let server: ChildProcess | undefined;
let base: string;
let app: AppHandle;

function runCli(args: string[], expected: number): void {
  const result = spawnSync("pubforge", args, { encoding: "utf8" });
  if (result.status !== expected) {
    throw new Error(
      `pubforge ${args[0]} exited ${result.status}, expected ${expected}:\n` +
        `${result.stdout}\n${result.stderr}`,
    );
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

async function until<T>(
  probe: () => T | null | undefined | false,
  what: string,
  timeoutMs = 10_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const found = probe();
    if (found) {
      return found;
    }
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for ${what}`);
    }
    await sleep(50);
  }
}

async function respondsAtPort(child: ChildProcess, url: string): Promise<boolean> {
  let exited = false;
  child.once("exit", () => {
    exited = true;
  });
  const deadline = Date.now() + 15_000;
  while (Date.now() < deadline) {
    if (exited) {
      return false;
    }
    try {
      const response = await fetch(url);
      if (response.ok) {
        return true;
      }
    } catch {
      // not listening yet
    }
    await sleep(150);
  }
  return false;
}

async function startService(reportsDir: string, synonymsPath: string): Promise<void> {
  for (let attempt = 0; attempt < 5; attempt++) {
    const port = 18000 + Math.floor(Math.random() * 20000);
    const child = spawn(
      "pubforge",
      [
        "serve",
        "--reports",
        reportsDir,
        "--synonyms",
        synonymsPath,
        "--bind",
        `127.0.0.1:${port}`,
        "--ui",
        DIST,
      ],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    const candidate = `http://127.0.0.1:${port}`;
    if (await respondsAtPort(child, `${candidate}/api/reports`)) {
      server = child;
      base = candidate;
      return;
    }
    child.kill();
  }
  throw new Error("could not start the report service on any port");
}

beforeAll(async () => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "webui-live-"));
  for (const name of [
    "member_db.json",
    "publisher.json",
    "agencies.json",
    "proof.txt",
    "synonyms.json",
  ]) {
    fs.copyFileSync(path.join(FIXTURES, name), path.join(tmp, name));
  }
  const reportsDir = path.join(tmp, "reports");
  fs.mkdirSync(reportsDir);

  runCli(
    [
      "authorlist",
      "snapshot",
      "--member-db",
      path.join(tmp, "member_db.json"),
      "--date",
      "2020-01-15",
      "--ref-code",
      REF_CODE,
      "--title",
      "Search for forged decays",
      "--format",
      "xml",
      "--out",
      path.join(tmp, "reference.xml"),
    ],
    0,
  );
  // one institute is misspelled in the proof, so compare reports a finding
  runCli(
    [
      "compare",
      "--xml",
      path.join(tmp, "reference.xml"),
      "--proof",
      path.join(tmp, "proof.txt"),
      "--publisher",
      path.join(tmp, "publisher.json"),
      "--synonyms",
      path.join(tmp, "synonyms.json"),
      "--agencies",
      path.join(tmp, "agencies.json"),
      "--document",
      "doc9001",
      "--filename",
      "proof_v1",
      "--creation-date",
      "2020-03-02",
      "--reports",
      reportsDir,
    ],
    1,
  );

  await startService(reportsDir, path.join(tmp, "synonyms.json"));

  const root = document.createElement("div");
  root.id = "app";
  document.body.replaceChildren(root);
  app = mount(root, new ApiClient(base));
});

afterAll(() => {
  server?.kill();
  if (tmp) {
    fs.rmSync(tmp, { recursive: true, force: true });
  }
});

function banner(): HTMLElement {
  return app.root.querySelector<HTMLElement>(".banner")!;
}

function badge(category: string): string {
  const section = app.root.querySelector(
    `section[data-category="${category}"]`,
  );
  return section?.querySelector(".badge")?.textContent ?? "";
}

/** Types "Alberta" into the search box and waits for the filtered list,
 * so assertions never see the unfiltered initial render. */
async function searchAlberta(): Promise<Element> {
  await app.navigate("#/synonyms");
  const input = app.root.querySelector<HTMLInputElement>("input.search")!;
  input.value = "Alberta";
  input.dispatchEvent(new Event("input", { bubbles: true }));
  await until(
    () => app.root.querySelectorAll(".institutes .record").length === 1,
    "the filtered institute list",
  );
  return app.root.querySelector('.institutes .record[data-id="2"]')!;
}

describe("served bundle", () => {
  it("delivers the page shell and the module scripts", async () => {
    const page = await fetch(`${base}/`);
    expect(page.ok).toBe(true);
    expect(await page.text()).toContain('<div id="app">');

    const script = await fetch(`${base}/main.js`);
    expect(script.ok).toBe(true);
    expect(script.headers.get("content-type")).toContain("javascript");
  });
});

describe("review loop", () => {
  it("lists the stored report", async () => {
    await app.navigate("#/reports");
    const link = app.root.querySelector<HTMLAnchorElement>(".report-list a")!;
    expect(link.textContent).toBe(REPORT_NAME);
  });

  it('finds entry id 2 when searching for "Alberta"', async () => {
    const record = await searchAlberta();
    expect(record.querySelector(".original")!.textContent).toBe(ALBERTA);
    const stored = [...record.querySelectorAll(".synonym-list li")];
    expect(stored).toHaveLength(1);
    expect(app.root.querySelectorAll(".institutes .record")).toHaveLength(1);
  });

  it("shows the misspelled institute as a finding before any edit", async () => {
    await app.navigate(`#/reports/${REPORT_NAME}`);
    expect(badge("institutes_missing_pdf_list")).toBe("1");
    expect(badge("institutes_missing_pdf_skip")).toBe("0");
    const finding = app.root.querySelector(
      'section[data-category="institutes_missing_pdf_list"] tbody tr',
    )!;
    expect(finding.children[0].textContent).toBe(ALBERTA);
  });

  it("moves the entry to the skipped section after a synonym and a re-run", async () => {
    const record = await searchAlberta();

    record.querySelector<HTMLButtonElement>(".edit")!.click();
    const form = record.querySelector<HTMLFormElement>(".add-form")!;
    expect(form.hidden).toBe(false);
    form.querySelector<HTMLInputElement>('input[name="synonym"]')!.value =
      MISSPELLING;
    form.querySelector<HTMLButtonElement>(".confirm")!.click();

    await until(() => {
      const fresh = app.root.querySelector('.institutes .record[data-id="2"]');
      const items = fresh ? [...fresh.querySelectorAll(".synonym-list li")] : [];
      return items.some((item) => item.textContent === MISSPELLING);
    }, "the stored synonym to appear");
    expect(banner().hidden).toBe(true);

    await app.navigate(`#/reports/${REPORT_NAME}`);
    app.root.querySelector<HTMLButtonElement>(".recheck")!.click();
    await until(
      () => badge("institutes_missing_pdf_skip") === "1",
      "the recheck to land the entry in the skipped section",
    );
    expect(badge("institutes_missing_pdf_list")).toBe("0");
    expect(banner().hidden).toBe(true);

    const skipRow = app.root.querySelector(
      'section[data-category="institutes_missing_pdf_skip"] tbody tr',
    )!;
    expect(skipRow.children[0].textContent).toBe(ALBERTA);
    expect(skipRow.children[1].textContent).toBe(MISSPELLING);
    expect(skipRow.children[3].textContent).toBe("accepted by registered synonym");
  });

  it('toggles the skipped entries with the "Skipped +" control', () => {
    const section = app.root.querySelector(
      'section[data-category="institutes_missing_pdf_skip"]',
    )!;
    const toggle = section.querySelector<HTMLButtonElement>(".skip-toggle")!;
    const body = section.querySelector<HTMLElement>(".entries")!;
    expect(toggle.textContent).toContain("Skipped +");
    expect(body.hidden).toBe(true);

    toggle.click();
    expect(body.hidden).toBe(false);
    expect(body.textContent).toContain(ALBERTA);

    toggle.click();
    expect(body.hidden).toBe(true);
  });

  it("rejects a duplicate registration inline without touching the list", async () => {
    const record = await searchAlberta();
    const countBefore = record.querySelectorAll(".synonym-list li").length;

    record.querySelector<HTMLButtonElement>(".edit")!.click();
    const form = record.querySelector<HTMLFormElement>(".add-form")!;
    form.querySelector<HTMLInputElement>('input[name="synonym"]')!.value =
      MISSPELLING;
    form.querySelector<HTMLButtonElement>(".confirm")!.click();

    const inline = await until(() => {
      const message = form.querySelector<HTMLElement>(".inline-error");
      return message && !message.hidden ? message : null;
    }, "the duplicate message");
    expect(inline.textContent).toContain("already registered");
    expect(record.querySelectorAll(".synonym-list li")).toHaveLength(countBefore);
  });
});
