/** Synonym search and editor.
 *
 * The search box queries the service on every keystroke; a sequence
 * counter drops answers that arrive out of order. Each record opens
 * an add-synonym form that posts and then re-runs the current query,
 * so the list always shows stored state. Validation failures land
 * next to the field, duplicate registrations as an inline message.
 */

import { ApiError, AuthorRecord, SynonymKind } from "./api.js";
import { AppContext } from "./context.js";
import { describeError, el } from "./dom.js";

function synonymList(synonyms: string[]): HTMLElement {
  const list = el("ul", { class: "synonym-list" });
  if (synonyms.length === 0) {
    list.appendChild(el("li", { class: "empty" }, "no synonyms"));
    return list;
  }
  for (const synonym of synonyms) {
    list.appendChild(el("li", {}, synonym));
  }
  return list;
}

function recordItem(
  ctx: AppContext,
  kind: SynonymKind,
  original: string,
  meta: string,
  synonyms: string[],
  attrs: Record<string, string>,
  refresh: () => Promise<void>,
): HTMLElement {
  const item = el("li", { class: "record", ...attrs });
  const edit = el("button", { type: "button", class: "edit" }, "edit");
  const input = el("input", {
    name: "synonym",
    "aria-label": `new synonym for ${original}`,
  });
  const confirm = el("button", { type: "submit", class: "confirm" }, "add");
  const fieldError = el("span", {
    class: "field-error",
    "data-field": "synonym",
  });
  fieldError.hidden = true;
  const inlineError = el("span", { class: "inline-error" });
  inlineError.hidden = true;
  const form = el(
    "form",
    { class: "add-form" },
    input,
    confirm,
    fieldError,
    inlineError,
  );
  form.hidden = true;

  edit.addEventListener("click", () => {
    form.hidden = !form.hidden;
    if (!form.hidden) {
      input.focus();
    }
  });

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    fieldError.hidden = true;
    inlineError.hidden = true;
    confirm.disabled = true;
    try {
      await ctx.client.addSynonym({ kind, original, synonym: input.value });
      await refresh();
    } catch (error) {
      if (error instanceof ApiError && error.status === 400) {
        const fields = error.fieldErrors();
        if (fields.synonym) {
          fieldError.textContent = fields.synonym;
          fieldError.hidden = false;
        }
        const rest = Object.entries(fields)
          .filter(([field]) => field !== "synonym")
          .map(([field, message]) => `${field}: ${message}`);
        if (rest.length > 0) {
          inlineError.textContent = rest.join("; ");
          inlineError.hidden = false;
        }
      } else if (error instanceof ApiError && error.status > 0) {
        inlineError.textContent = error.message;
        inlineError.hidden = false;
      } else {
        ctx.showError(describeError(error));
      }
    } finally {
      confirm.disabled = false;
    }
  });

  item.appendChild(el("span", { class: "original" }, original));
  item.appendChild(el("span", { class: "meta" }, meta));
  item.appendChild(synonymList(synonyms));
  item.appendChild(edit);
  item.appendChild(form);
  return item;
}

function authorMeta(record: AuthorRecord): string {
  const parts: string[] = [];
  if (record.inspire) {
    parts.push(record.inspire);
  }
  if (record.foafName) {
    parts.push(record.foafName);
  }
  return parts.join(", ");
}

export async function buildSynonymView(ctx: AppContext): Promise<HTMLElement> {
  const input = el("input", {
    type: "search",
    class: "search",
    placeholder: "search institutes and authors",
    "aria-label": "search synonyms",
  });
  const results = el("div", { class: "results" });
  const section = el(
    "section",
    { class: "synonyms" },
    el("h2", {}, "Synonyms"),
    input,
    results,
  );

  let searchSeq = 0;
  async function runSearch(query: string): Promise<void> {
    const seq = ++searchSeq;
    try {
      const matches = await ctx.client.synonyms(query);
      if (seq !== searchSeq) {
        return;
      }
      const refresh = () => runSearch(input.value);
      const institutes = el("ul", { class: "institutes" });
      for (const record of matches.institutes) {
        institutes.appendChild(
          recordItem(
            ctx,
            "institute",
            record.original,
            `id ${record.id}`,
            record.synonyms,
            { "data-id": record.id },
            refresh,
          ),
        );
      }
      const authors = el("ul", { class: "authors" });
      for (const record of matches.authors) {
        authors.appendChild(
          recordItem(
            ctx,
            "author",
            record.original,
            authorMeta(record),
            record.synonyms,
            record.inspire ? { "data-inspire": record.inspire } : {},
            refresh,
          ),
        );
      }
      results.replaceChildren(
        el("h3", {}, `Institutes (${matches.institutes.length})`),
        institutes,
        el("h3", {}, `Authors (${matches.authors.length})`),
        authors,
      );
      ctx.clearError();
    } catch (error) {
      if (seq !== searchSeq) {
        return;
      }
      results.replaceChildren();
      ctx.showError(describeError(error));
    }
  }

  input.addEventListener("input", () => {
    void runSearch(input.value);
  });

  await runSearch("");
  return section;
}
