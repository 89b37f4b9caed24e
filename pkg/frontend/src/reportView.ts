/** Report detail view.
 *
 * Renders the six header fields and all eleven category sections in
 * stored order. Skip categories collapse behind the "Skipped +"
 * control; every section carries a badge whose number is the length
 * of the fetched array, nothing is counted client-side. Long entry
 * tables render their first rows only, the rest appear on demand.
 */

import { Report, ReportEntry } from "./api.js";
import {
  CATEGORY_FIELDS,
  CATEGORY_TITLES,
  CategoryField,
  HEADER_FIELDS,
  HEADER_LABELS,
  SKIP_CATEGORIES,
} from "./categories.js";
import { AppContext } from "./context.js";
import { describeError, el } from "./dom.js";

export const LAZY_LIMIT = 10;

function entryRow(entry: ReportEntry): HTMLTableRowElement {
  return el(
    "tr",
    {},
    el("td", {}, entry.reference),
    el("td", {}, entry.printed ?? ""),
    el("td", {}, entry.distance === undefined ? "" : String(entry.distance)),
    el("td", {}, entry.detail),
  );
}

function entryBlock(entries: ReportEntry[]): HTMLElement {
  const block = el("div", { class: "entries" });
  if (entries.length === 0) {
    block.appendChild(el("p", { class: "empty" }, "none"));
    return block;
  }
  const body = el("tbody", {});
  for (const entry of entries.slice(0, LAZY_LIMIT)) {
    body.appendChild(entryRow(entry));
  }
  block.appendChild(
    el(
      "table",
      {},
      el(
        "thead",
        {},
        el(
          "tr",
          {},
          el("th", {}, "Reference"),
          el("th", {}, "Printed"),
          el("th", {}, "Distance"),
          el("th", {}, "Detail"),
        ),
      ),
      body,
    ),
  );
  if (entries.length > LAZY_LIMIT) {
    const more = el(
      "button",
      { type: "button", class: "show-more" },
      `show all ${entries.length}`,
    );
    more.addEventListener("click", () => {
      for (const entry of entries.slice(LAZY_LIMIT)) {
        body.appendChild(entryRow(entry));
      }
      more.remove();
    });
    block.appendChild(more);
  }
  return block;
}

export function categorySection(
  name: CategoryField,
  entries: ReportEntry[],
): HTMLElement {
  const badge = el("span", { class: "badge" }, String(entries.length));
  const block = entryBlock(entries);
  const section = el("section", { class: "category", "data-category": name });
  if (SKIP_CATEGORIES.has(name)) {
    section.classList.add("skip");
    const toggle = el(
      "button",
      { type: "button", class: "skip-toggle", "aria-expanded": "false" },
      "Skipped + ",
      badge,
    );
    block.hidden = true;
    toggle.addEventListener("click", () => {
      block.hidden = !block.hidden;
      toggle.setAttribute("aria-expanded", block.hidden ? "false" : "true");
    });
    section.appendChild(el("h3", {}, toggle, " ", CATEGORY_TITLES[name]));
  } else {
    section.appendChild(el("h3", {}, `${CATEGORY_TITLES[name]} `, badge));
  }
  section.appendChild(block);
  return section;
}

function headerTable(report: Report): HTMLElement {
  const body = el("tbody", {});
  for (const field of HEADER_FIELDS) {
    body.appendChild(
      el("tr", {}, el("th", {}, HEADER_LABELS[field]), el("td", {}, report[field])),
    );
  }
  return el("table", { class: "report-head" }, body);
}

export function renderReport(
  ctx: AppContext,
  name: string,
  report: Report,
): HTMLElement {
  const article = el("article", { class: "report", "data-name": name });
  const recheck = el(
    "button",
    { type: "button", class: "recheck" },
    "re-run check",
  );
  recheck.addEventListener("click", async () => {
    const controls = article.querySelectorAll("button");
    controls.forEach((control) => {
      control.disabled = true;
    });
    ctx.clearError();
    try {
      const refreshed = await ctx.client.recheck(name);
      article.replaceWith(renderReport(ctx, name, refreshed));
    } catch (error) {
      ctx.showError(describeError(error));
      controls.forEach((control) => {
        control.disabled = false;
      });
    }
  });
  article.appendChild(
    el("h2", {}, `Proof check ${report.ref_code} `, recheck),
  );
  article.appendChild(headerTable(report));
  for (const field of CATEGORY_FIELDS) {
    article.appendChild(categorySection(field, report[field]));
  }
  return article;
}

export async function buildReportView(
  ctx: AppContext,
  name: string,
): Promise<HTMLElement> {
  const report = await ctx.client.report(name);
  return renderReport(ctx, name, report);
}
