import type { Decision, ExportResult, PairView, ProgressView, QueueView, SessionInfo } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin client over the screening server's JSON routes. */
export class ReviewApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(this.baseUrl.replace(/\/$/, "") + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = await resp.json();
        if (body && typeof body.error === "string") detail = body.error;
      } catch {
        // keep statusText
      }
      throw new ApiError(resp.status, detail);
    }
    return resp;
  }

  async session(): Promise<SessionInfo> {
    return (await this.request("/")).json();
  }

  async queue(sessionId: string, annotator: string): Promise<QueueView> {
    const path = `/session/${encodeURIComponent(sessionId)}/queue?annotator=${encodeURIComponent(annotator)}`;
    return (await this.request(path)).json();
  }

  async pair(pairId: string): Promise<PairView & { src_clips: string[]; tgt_clips: string[] }> {
    return (await this.request(`/pair/${encodeURIComponent(pairId)}`)).json();
  }

  async submitDecision(annotator: string, pairId: string, decision: Decision): Promise<void> {
    await this.request("/decision", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator, pair_id: pairId, decision }),
    });
  }

  async progress(): Promise<ProgressView> {
    return (await this.request("/progress")).json();
  }

  async exportStrict(): Promise<ExportResult> {
    const resp = await this.request("/export");
    const text = await resp.text();
    // incomplete sessions answer with a plain JSON status object; the
    // finished export is NDJSON (application/x-ndjson)
    if ((resp.headers.get("Content-Type") ?? "").startsWith("application/json")) {
      const body = JSON.parse(text);
      if (body.status === "incomplete") return { status: "incomplete", undecided: body.undecided };
    }
    return { status: "complete", body: text };
  }
}
