// Thin typed client over the service's JSON endpoints. Every console
// action maps to exactly one of these calls.

import type {
  AccountCard,
  ApiErrorBody,
  FlagValue,
  Projection,
  QueryResponse,
  Session,
  SpaceInfo,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.status = status;
    this.code = body.code;
  }
}

export function newRequestId(): string {
  const bytes = new Uint8Array(8);
  crypto.getRandomValues(bytes);
  return Array.from(bytes, (b) => b.toString(16).padStart(2, "0")).join("");
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      let body: ApiErrorBody;
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        body = { code: "unknown", message: `HTTP ${response.status}` };
      }
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request("/health");
  }

  datasets(): Promise<string[]> {
    return this.request("/datasets");
  }

  spaces(dataset: string): Promise<SpaceInfo[]> {
    return this.request(`/datasets/${encodeURIComponent(dataset)}/spaces`);
  }

  account(dataset: string, accountId: string): Promise<AccountCard> {
    return this.request(
      `/datasets/${encodeURIComponent(dataset)}/accounts/${encodeURIComponent(accountId)}`,
    );
  }

  projection(dataset: string, space: string, method = "pca"): Promise<Projection> {
    const params = new URLSearchParams({ space, method });
    return this.request(`/datasets/${encodeURIComponent(dataset)}/projection?${params}`);
  }

  createSession(dataset: string, space?: string, requestId?: string): Promise<Session> {
    return this.post("/sessions", {
      dataset,
      space,
      request_id: requestId ?? newRequestId(),
    });
  }

  getSession(sessionId: string): Promise<Session> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}`);
  }

  exportSession(sessionId: string): Promise<Session> {
    return this.request(`/sessions/${encodeURIComponent(sessionId)}/export`);
  }

  query(
    sessionId: string,
    body: { seeds: string[]; k: number; space?: string; aggregation?: string },
    requestId?: string,
  ): Promise<QueryResponse> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/query`, {
      ...body,
      request_id: requestId ?? newRequestId(),
    });
  }

  flag(
    sessionId: string,
    accountId: string,
    flag: FlagValue,
    requestId?: string,
  ): Promise<{ account_id: string; flag: FlagValue }> {
    return this.post(`/sessions/${encodeURIComponent(sessionId)}/flags`, {
      account_id: accountId,
      flag,
      request_id: requestId ?? newRequestId(),
    });
  }
}
