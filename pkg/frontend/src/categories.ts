/** Report category vocabulary, mirroring the service's JSON contract.
 *
 * Order and spellings are fixed by the stored report format; do not
 * normalize them here.
 */

export const HEADER_FIELDS = [
  "ref_code",
  "ref_date",
  "creation_date",
  "publisher",
  "document",
  "filename",
] as const;

export const CATEGORY_FIELDS = [
  "authors_missing_skip",
  "authors_missing_list",
  "authors_puntuation_list",
  "institutes_missing_pdf_list",
  "institutes_missing_pdf_skip",
  "authors_mismatched_list",
  "authors_not_deceased_list",
  "authors_deceased_list",
  "institutes_close_matches_list",
  "founding_agencies_missing",
  "founding_agencies_wrong",
] as const;

export type HeaderField = (typeof HEADER_FIELDS)[number];
export type CategoryField = (typeof CATEGORY_FIELDS)[number];

/* Entries in these categories were suppressed by a registered synonym;
   they render collapsed behind the "Skipped +" control. */
export const SKIP_CATEGORIES: ReadonlySet<CategoryField> = new Set([
  "authors_missing_skip",
  "institutes_missing_pdf_skip",
] as const);

export const CATEGORY_TITLES: Record<CategoryField, string> = {
  authors_missing_skip: "Authors missing (skipped by synonym)",
  authors_missing_list: "Authors missing from proof",
  authors_puntuation_list: "Authors with initials punctuation differences",
  institutes_missing_pdf_list: "Institutes missing from proof",
  institutes_missing_pdf_skip: "Institutes missing (skipped by synonym)",
  authors_mismatched_list: "Authors with mismatched affiliations",
  authors_not_deceased_list: "Authors marked deceased only in proof",
  authors_deceased_list: "Deceased authors unmarked in proof",
  institutes_close_matches_list: "Institutes with close-match spellings",
  founding_agencies_missing: "Funding agencies missing from acknowledgements",
  founding_agencies_wrong: "Funding sentences naming no known agency",
};

export const HEADER_LABELS: Record<HeaderField, string> = {
  ref_code: "Reference code",
  ref_date: "Reference date",
  creation_date: "Created",
  publisher: "Publisher",
  document: "Document",
  filename: "Proof file",
};
