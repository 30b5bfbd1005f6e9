/** Typed client for the prediction service; the UI's only data source. */

import type {
  ApiSchema,
  FormValues,
  HealthResponse,
  ImportanceEntry,
  Mutation,
  PredictResponse,
  WhatIfResponse,
} from "./types";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, body?: unknown): Promise<T> {
  const res = await fetch(base + path, {
    method: body === undefined ? "GET" : "POST",
    headers: body === undefined ? {} : { "content-type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  if (!res.ok) {
    let code = "http_error";
    let message = `${res.status} ${res.statusText}`;
    try {
      const payload = (await res.json()) as { error?: string; message?: string };
      code = payload.error ?? code;
      message = payload.message ?? message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiRequestError(res.status, code, message);
  }
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  health(): Promise<HealthResponse> {
    return request(this.base, "/v1/health");
  }

  schema(): Promise<ApiSchema> {
    return request(this.base, "/v1/schema");
  }

  importance(): Promise<{ importance: ImportanceEntry[] }> {
    return request(this.base, "/v1/importance");
  }

  predict(attributes: FormValues): Promise<PredictResponse> {
    return request(this.base, "/v1/predict", attributes);
  }

  whatif(base: FormValues, mutations: Mutation[]): Promise<WhatIfResponse> {
    return request(this.base, "/v1/whatif", { base, mutations });
  }
}
