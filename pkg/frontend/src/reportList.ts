/** Stored-report index: one row per report, linking to the detail view. */

import { AppContext } from "./context.js";
import { el } from "./dom.js";

export async function buildReportList(ctx: AppContext): Promise<HTMLElement> {
  const index = await ctx.client.reportIndex();
  const section = el("section", { class: "report-list" }, el("h2", {}, "Stored reports"));
  if (index.reports.length === 0) {
    section.appendChild(el("p", { class: "empty" }, "no reports yet"));
    return section;
  }
  const body = el("tbody", {});
  for (const entry of index.reports) {
    body.appendChild(
      el(
        "tr",
        {},
        el(
          "td",
          {},
          el("a", { href: `#/reports/${encodeURIComponent(entry.name)}` }, entry.name),
        ),
        el("td", {}, entry.ref_code),
        el("td", {}, entry.filename),
        el("td", {}, entry.creation_date),
      ),
    );
  }
  section.appendChild(
    el(
      "table",
      {},
      el(
        "thead",
        {},
        el(
          "tr",
          {},
          el("th", {}, "Report"),
          el("th", {}, "Reference code"),
          el("th", {}, "Proof file"),
          el("th", {}, "Created"),
        ),
      ),
      body,
    ),
  );
  return section;
}
