/** Shared pieces for the view tests: canned reports, a scripted fetch,
 * and a context stub that records banner messages. */

import { ApiClient, FetchInit, FetchLike, Report } from "../../src/api.js";
import { CATEGORY_FIELDS } from "../../src/categories.js";
import { AppContext } from "../../src/context.js";

export function emptyReport(overrides: Partial<Report> = {}): Report {
  const report = {
    ref_code: "ANA-EXOT-2020-01",
    ref_date: "31-Jul-2018",
    creation_date: "29-Oct-2018",
    publisher: "APS",
    document: "doc1053",
    filename: "proof_v1",
  } as Report;
  for (const field of CATEGORY_FIELDS) {
    report[field] = [];
  }
  return { ...report, ...overrides };
}

export interface Exchange {
  url: string;
  init?: FetchInit;
}

export interface Scripted {
  fetchFn: FetchLike;
  calls: Exchange[];
}

/** Routes each request through `handler`; unknown URLs reject loudly. */
export function scriptedFetch(
  handler: (url: string, init?: FetchInit) => { status: number; body: unknown } | undefined,
): Scripted {
  const calls: Exchange[] = [];
  const fetchFn: FetchLike = async (url, init) => {
    calls.push({ url, init });
    const answer = handler(url, init);
    if (answer === undefined) {
      throw new Error(`unexpected request: ${init?.method ?? "GET"} ${url}`);
    }
    return {
      ok: answer.status >= 200 && answer.status < 300,
      status: answer.status,
      text: async () => JSON.stringify(answer.body),
    };
  };
  return { fetchFn, calls };
}

export interface StubContext {
  ctx: AppContext;
  errors: string[];
}

export function stubContext(client: ApiClient): StubContext {
  const errors: string[] = [];
  return {
    ctx: {
      client,
      showError(message: string) {
        errors.push(message);
      },
      clearError() {},
    },
    errors,
  };
}

/** Lets a test hold a response open to observe the pending state. */
export function deferred<T>(): {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (error: unknown) => void;
} {
  let resolve!: (value: T) => void;
  let reject!: (error: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

/** Waits out the promise chains behind fired event handlers. */
export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}
