// Thin typed client over the assessment service's REST API.
// The fetch implementation is injectable so tests run without a network.

import {
  ApiError,
  ErrorEnvelope,
  Page,
  PaperDetail,
  PaperSummary,
  Proposal,
  ProposalForm,
  Stats,
  Verdict,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface QueueFilters {
  status?: "awaiting" | "assessed";
  category?: string;
  page?: number;
  pageSize?: number;
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (error) {
      throw new ApiError(0, "network_error", `cannot reach service: ${error}`);
    }
    const text = await response.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        throw new ApiError(response.status, "bad_response", "service returned non-JSON");
      }
    }
    if (!response.ok) {
      const envelope = (payload ?? {}) as Partial<ErrorEnvelope>;
      throw new ApiError(
        response.status,
        envelope.error_code ?? "unknown_error",
        envelope.message ?? `HTTP ${response.status}`,
        envelope.details ?? {},
      );
    }
    return payload as T;
  }

  listPapers(filters: QueueFilters = {}): Promise<Page<PaperSummary>> {
    const params = new URLSearchParams();
    if (filters.status) params.set("status", filters.status);
    if (filters.category) params.set("category", filters.category);
    if (filters.page) params.set("page", String(filters.page));
    if (filters.pageSize) params.set("page_size", String(filters.pageSize));
    const query = params.toString();
    return this.request("GET", `/api/papers${query ? "?" + query : ""}`);
  }

  getPaper(paperId: string): Promise<PaperDetail> {
    return this.request("GET", `/api/papers/${encodeURIComponent(paperId)}`);
  }

  submitAssessment(
    paperId: string,
    verdict: Verdict,
    assessor: string,
    note?: string,
  ): Promise<{ assessment: unknown }> {
    return this.request(
      "POST",
      `/api/papers/${encodeURIComponent(paperId)}/assessments`,
      { verdict, assessor, note: note || null },
    );
  }

  submitProposal(form: ProposalForm): Promise<{ proposal: Proposal }> {
    return this.request("POST", "/api/proposals", {
      pattern: form.pattern,
      category: form.category,
      expected_phrase: form.expected_phrase || null,
      proposer: form.proposer,
    });
  }

  resolveProposal(
    proposalId: string,
    decision: "approve" | "reject",
    note?: string,
  ): Promise<{ proposal: Proposal }> {
    return this.request(
      "POST",
      `/api/proposals/${encodeURIComponent(proposalId)}/resolution`,
      { decision, note: note || null },
    );
  }

  listProposals(state?: string): Promise<{ items: Proposal[] }> {
    const query = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request("GET", `/api/proposals${query}`);
  }

  getStats(): Promise<Stats> {
    return this.request("GET", "/api/stats");
  }
}
