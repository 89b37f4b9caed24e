import { ApiClient } from "./api.js";

/** What every view gets: the API client and the shared error banner. */
export interface AppContext {
  client: ApiClient;
  showError(message: string): void;
  clearError(): void;
}
