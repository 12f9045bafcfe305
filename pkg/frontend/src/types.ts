// Mirrors of the REST API's JSON shapes. The server is the source of
// truth; nothing here adds invariants beyond what the endpoints return.

export type Verdict = "problematic" | "not_problematic" | "unsure";
export type Category = "scigen" | "mathgen" | "sbir" | "tortured";
export type ProposalState = "open" | "approved" | "rejected";

export interface Status {
  state: "awaiting" | "assessed";
  label: Verdict | null;
}

export interface PaperSummary {
  paper_id: string;
  title: string;
  doi: string | null;
  external_id: string | null;
  status: Status;
  categories: Category[];
  hit_count: number;
  record_url: string | null;
  pubpeer_url: string | null;
  first_seen: string | null;
}

export interface Page<T> {
  items: T[];
  page: number;
  page_size: number;
  total: number;
  total_pages: number;
}

export interface HitDetail {
  fingerprint_id: string;
  start: number;
  end: number;
  snippet: string;
  matched_surface: string;
  category: Category;
  pattern: string;
  expected_phrase: string | null;
}

export interface AssessmentRow {
  paper_id: string;
  verdict: Verdict;
  assessor: string;
  timestamp: string;
  note: string | null;
}

export interface PaperRecord {
  paper_id: string;
  doi: string | null;
  external_id: string | null;
  title: string;
  venue: string | null;
  year: number | null;
  record_url: string | null;
  pubpeer_url: string | null;
  first_seen: string | null;
}

export interface PaperDetail {
  record: PaperRecord;
  status: Status;
  categories: Category[];
  hits: HitDetail[];
  assessments: AssessmentRow[];
}

export interface Proposal {
  proposal_id: string;
  pattern: string;
  category: Category;
  expected_phrase: string | null;
  proposer: string;
  submitted: string;
  state: ProposalState;
  resolution_note: string | null;
}

export interface Stats {
  total_suspects: number;
  awaiting: number;
  assessed: number;
  assessed_problematic: number;
  assessed_not_problematic: number;
  assessed_unsure: number;
  per_category_counts: Record<Category, number>;
}

export interface ProposalForm {
  pattern: string;
  category: Category;
  expected_phrase?: string;
  proposer: string;
}

export interface ErrorEnvelope {
  error_code: string;
  message: string;
  details?: Record<string, string>;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly errorCode: string,
    message: string,
    public readonly details: Record<string, string> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}
