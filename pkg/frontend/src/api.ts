/**
 * Thin typed client over the service routes. The fetch implementation is
 * injectable so tests and non-browser hosts can supply their own.
 */

import {
  AnnotationPayload,
  AnnotationReply,
  QueueReply,
  ResponsesReply,
  ResponsesSubmit,
  TestPayload,
} from "./types";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** An HTTP-level rejection: the request reached the service and was refused. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`service replied ${status}: ${JSON.stringify(detail)}`);
    this.name = "ApiError";
  }
}

export interface ClientOptions {
  baseUrl: string;
  token?: string;
  fetch?: FetchLike;
}

export class ServiceClient {
  private readonly baseUrl: string;
  private readonly token?: string;
  private readonly fetchImpl: FetchLike;

  constructor(options: ClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetch ?? fetch;
  }

  private headers(hasBody: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (hasBody) h["Content-Type"] = "application/json";
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: this.headers(body !== undefined) };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const text = await response.text();
    let parsed: unknown = text;
    const type = response.headers.get("content-type") ?? "";
    if (type.includes("application/json")) {
      parsed = text ? JSON.parse(text) : null;
    }
    if (!response.ok) {
      throw new ApiError(response.status, parsed);
    }
    return parsed as T;
  }

  getTest(versionId: string): Promise<TestPayload> {
    return this.request("GET", `/tests/${encodeURIComponent(versionId)}`);
  }

  submitResponses(versionId: string, body: ResponsesSubmit): Promise<ResponsesReply> {
    return this.request("POST", `/tests/${encodeURIComponent(versionId)}/responses`, body);
  }

  reviewQueue(): Promise<QueueReply> {
    return this.request("GET", "/review/queue");
  }

  submitAnnotation(questionId: string, body: AnnotationPayload): Promise<AnnotationReply> {
    return this.request("POST", `/review/${encodeURIComponent(questionId)}/annotations`, body);
  }

  learnerReport(): Promise<string> {
    return this.request("GET", "/reports/learner");
  }

  expertReport(): Promise<string> {
    return this.request("GET", "/reports/expert");
  }
}
