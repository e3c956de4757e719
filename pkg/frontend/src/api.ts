/**
 * Minimal gateway client. Every response body is run through the strict
 * schemas in schema.ts before it reaches the rest of the client.
 */

import {
  Choice,
  JudgmentAck,
  JudgmentAckSchema,
  NextResponse,
  NextResponseSchema,
  Report,
  ReportSchema,
  SessionListSchema,
  SessionSummary,
} from "./schema.js";

export class GatewayError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class GatewayClient {
  /** Raw payload observer, used by tests to audit everything received. */
  onPayload?: (payload: unknown) => void;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: Parameters<FetchLike>[1]): Promise<unknown> {
    const res = await this.fetchImpl(this.baseUrl + path, init);
    const body = await res.json();
    this.onPayload?.(body);
    if (res.status >= 400) {
      const detail =
        typeof body === "object" && body !== null && "detail" in body
          ? String((body as { detail: unknown }).detail)
          : `HTTP ${res.status}`;
      throw new GatewayError(detail, res.status);
    }
    return body;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const body = await this.request("/ab/sessions");
    return SessionListSchema.parse(body).sessions;
  }

  async next(sessionId: string): Promise<NextResponse> {
    const body = await this.request(`/ab/sessions/${sessionId}/next`);
    return NextResponseSchema.parse(body);
  }

  async judge(sessionId: string, pairId: string, choice: Choice): Promise<JudgmentAck> {
    const body = await this.request(`/ab/sessions/${sessionId}/judgments`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ pair_id: pairId, choice }),
    });
    return JudgmentAckSchema.parse(body);
  }

  async report(sessionId: string): Promise<Report> {
    const body = await this.request(`/ab/sessions/${sessionId}/report`);
    return ReportSchema.parse(body);
  }
}
