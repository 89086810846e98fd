/** Thin JSON client for the summarization service.
 *
 * Accepts an injectable fetch so tests can stub the transport. Service
 * errors arrive as {code, message, retriable} bodies; both those and
 * transport failures surface as ApiError.
 */

import type { CitanceListing, PanelPayload, PaperDoc, SummarizeRequest } from "./model.js";

export interface HttpResponse {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<HttpResponse>;

export class ApiError extends Error {
  readonly code: string;
  readonly retriable: boolean;
  readonly status: number | null;

  constructor(code: string, message: string, retriable: boolean, status: number | null = null) {
    super(message);
    this.name = "ApiError";
    this.code = code;
    this.retriable = retriable;
    this.status = status;
  }
}

export function toApiError(err: unknown): ApiError {
  if (err instanceof ApiError) return err;
  const message = err instanceof Error ? err.message : String(err);
  // transport-level failures are worth retrying; the server never saw us
  return new ApiError("NetworkError", message, true);
}

export class ServiceClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    const fallback = (globalThis as { fetch?: FetchLike }).fetch;
    if (!fetchFn && !fallback) throw new Error("no fetch implementation available");
    this.fetchFn = fetchFn ?? (fallback as FetchLike).bind(globalThis);
  }

  getPaper(paperId: string): Promise<PaperDoc> {
    return this.request(`/papers/${encodeURIComponent(paperId)}`) as Promise<PaperDoc>;
  }

  getCitances(paperId: string): Promise<CitanceListing> {
    return this.request(
      `/papers/${encodeURIComponent(paperId)}/citances`,
    ) as Promise<CitanceListing>;
  }

  summarize(req: SummarizeRequest): Promise<PanelPayload> {
    return this.request("/summarize", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    }) as Promise<PanelPayload>;
  }

  private async request(
    path: string,
    init?: { method?: string; headers?: Record<string, string>; body?: string },
  ): Promise<unknown> {
    let response: HttpResponse;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      throw toApiError(err);
    }
    if (response.ok) {
      try {
        return await response.json();
      } catch {
        throw new ApiError("BadResponse", "service returned unparseable JSON", false, response.status);
      }
    }
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      // fall through to the generic error below
    }
    if (body && typeof body === "object" && "code" in body && "message" in body) {
      const e = body as { code: string; message: string; retriable?: boolean };
      throw new ApiError(e.code, e.message, e.retriable ?? false, response.status);
    }
    throw new ApiError("HttpError", `service responded ${response.status}`, response.status >= 500, response.status);
  }
}
