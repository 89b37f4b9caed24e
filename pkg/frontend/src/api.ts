/** Typed client for the report service HTTP API.
 *
 * Every request goes through one JSON pipeline so error payloads are
 * decoded uniformly: the service answers failures with either
 * {"error": message} or {"errors": {field: message}}.
 */

import { CategoryField, HeaderField } from "./categories.js";

export interface FetchInit {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}

export interface FetchResponse {
  ok: boolean;
  status: number;
  text(): Promise<string>;
}

export type FetchLike = (url: string, init?: FetchInit) => Promise<FetchResponse>;

export interface ReportIndexEntry {
  name: string;
  ref_code: string;
  filename: string;
  creation_date: string;
}

export interface ReportEntry {
  reference: string;
  printed?: string;
  distance?: number;
  detail: string;
}

export type Report = Record<HeaderField, string> &
  Record<CategoryField, ReportEntry[]>;

export interface InstituteRecord {
  id: string;
  original: string;
  synonyms: string[];
}

export interface AuthorRecord {
  original: string;
  inspire: string | null;
  foafName: string | null;
  synonyms: string[];
}

export interface SynonymMatches {
  institutes: InstituteRecord[];
  authors: AuthorRecord[];
}

export type SynonymKind = "institute" | "author";

export interface SynonymPost {
  kind: SynonymKind;
  original: string;
  synonym: string;
}

export class ApiError extends Error {
  readonly status: number;
  readonly payload: unknown;

  constructor(status: number, payload: unknown) {
    super(ApiError.describe(status, payload));
    this.name = "ApiError";
    this.status = status;
    this.payload = payload;
  }

  private static describe(status: number, payload: unknown): string {
    if (payload && typeof payload === "object") {
      const error = (payload as { error?: unknown }).error;
      if (typeof error === "string") {
        return error;
      }
    }
    return `request failed with status ${status}`;
  }

  /** Per-field messages from a validation failure, empty otherwise. */
  fieldErrors(): Record<string, string> {
    if (!this.payload || typeof this.payload !== "object") {
      return {};
    }
    const errors = (this.payload as { errors?: unknown }).errors;
    if (!errors || typeof errors !== "object") {
      return {};
    }
    const fields: Record<string, string> = {};
    for (const [field, message] of Object.entries(errors)) {
      if (typeof message === "string") {
        fields[field] = message;
      }
    }
    return fields;
  }
}

function defaultFetch(): FetchLike {
  const bound = (globalThis as { fetch?: FetchLike }).fetch;
  if (!bound) {
    throw new Error("no global fetch; pass one to ApiClient");
  }
  return bound.bind(globalThis);
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "", fetchFn?: FetchLike) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? defaultFetch();
  }

  private async request<T>(path: string, init?: FetchInit): Promise<T> {
    let response: FetchResponse;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (cause) {
      throw new ApiError(0, { error: `service unreachable: ${String(cause)}` });
    }
    const text = await response.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null;
      }
    }
    if (!response.ok) {
      throw new ApiError(response.status, payload);
    }
    return payload as T;
  }

  reportIndex(): Promise<{ reports: ReportIndexEntry[] }> {
    return this.request("/api/reports");
  }

  report(name: string): Promise<Report> {
    return this.request(`/api/reports/${encodeURIComponent(name)}`);
  }

  synonyms(query: string): Promise<SynonymMatches> {
    return this.request(`/api/synonyms?q=${encodeURIComponent(query)}`);
  }

  addSynonym(body: SynonymPost): Promise<unknown> {
    return this.request("/api/synonyms", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  /** Re-runs the stored comparison; resolves to the refreshed report. */
  recheck(name: string): Promise<Report> {
    return this.request(`/api/recheck/${encodeURIComponent(name)}`, {
      method: "POST",
    });
  }
}
