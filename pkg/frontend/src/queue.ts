// Triage queue state with optimistic verdict submission.
//
// Assessors work in bulk, so a verdict removes the paper from the
// awaiting queue immediately; if the POST then fails, the paper is put
// back where it was and the error is rethrown for the UI to surface.
// Status aggregation is never computed here — it always comes back from
// the API on the next load.

import { ApiClient, QueueFilters } from "./api.js";
import { PaperSummary, Verdict } from "./types.js";

export interface QueueState {
  items: PaperSummary[];
  total: number;
  page: number;
  totalPages: number;
  filters: QueueFilters;
  loading: boolean;
}

export class TriageQueue {
  readonly state: QueueState = {
    items: [],
    total: 0,
    page: 1,
    totalPages: 0,
    filters: { status: "awaiting" },
    loading: false,
  };

  constructor(private readonly api: ApiClient) {}

  async load(filters?: QueueFilters): Promise<void> {
    if (filters) {
      this.state.filters = { status: "awaiting", ...filters };
    }
    this.state.loading = true;
    try {
      const page = await this.api.listPapers(this.state.filters);
      this.state.items = page.items;
      this.state.total = page.total;
      this.state.page = page.page;
      this.state.totalPages = page.total_pages;
    } finally {
      this.state.loading = false;
    }
  }

  /** Optimistically drop the paper from an awaiting queue, rolling back on error. */
  async submitVerdict(
    paperId: string,
    verdict: Verdict,
    assessor: string,
    note?: string,
  ): Promise<void> {
    const index = this.state.items.findIndex((p) => p.paper_id === paperId);
    let removed: PaperSummary | undefined;
    if (index >= 0 && this.state.filters.status === "awaiting") {
      removed = this.state.items[index];
      this.state.items.splice(index, 1);
      this.state.total -= 1;
    }
    try {
      await this.api.submitAssessment(paperId, verdict, assessor, note);
    } catch (error) {
      if (removed !== undefined) {
        this.state.items.splice(index, 0, removed);
        this.state.total += 1;
      }
      throw error;
    }
  }
}
