// Browser wiring: hooks the queue, detail view, and proposal form into
// the DOM. All state logic lives in the imported modules so it can be
// tested headlessly; this file is intentionally just glue.

import { ApiClient } from "./api.js";
import { TriageQueue } from "./queue.js";
import {
  renderFormErrors,
  renderPaperDetail,
  renderQueue,
  renderStats,
} from "./render.js";
import { ApiError, Category, ProposalForm, Verdict } from "./types.js";
import { validateProposal } from "./validation.js";

const API_BASE =
  new URLSearchParams(window.location.search).get("api") ?? window.location.origin;

const api = new ApiClient(API_BASE);
const queue = new TriageQueue(api);

const el = (id: string) => document.getElementById(id) as HTMLElement;

function toast(message: string, kind: "ok" | "error" = "ok"): void {
  const box = el("toast");
  box.textContent = message;
  box.className = `toast ${kind} visible`;
  setTimeout(() => box.classList.remove("visible"), 4000);
}

function assessorName(): string {
  const input = el("assessor") as HTMLInputElement;
  return input.value.trim() || "anonymous";
}

let openPaperId: string | null = null;

async function refreshQueue(): Promise<void> {
  const status = (el("filter-status") as HTMLSelectElement).value;
  const category = (el("filter-category") as HTMLSelectElement).value;
  await queue.load({
    status: (status || undefined) as "awaiting" | "assessed" | undefined,
    category: category || undefined,
  });
  el("queue").innerHTML = renderQueue(queue.state);
  for (const row of document.querySelectorAll<HTMLElement>("#queue tr[data-paper-id]")) {
    row.addEventListener("click", () => openPaper(row.dataset.paperId as string));
  }
}

async function refreshStats(): Promise<void> {
  el("stats").innerHTML = renderStats(await api.getStats());
}

async function openPaper(paperId: string): Promise<void> {
  openPaperId = paperId;
  const detail = await api.getPaper(paperId);
  el("detail").innerHTML = renderPaperDetail(detail);
  el("verdict-actions").hidden = false;
}

async function submitVerdict(verdict: Verdict): Promise<void> {
  if (!openPaperId) {
    return;
  }
  const paperId = openPaperId;
  try {
    await queue.submitVerdict(paperId, verdict, assessorName());
    el("queue").innerHTML = renderQueue(queue.state);
    toast(`recorded ${verdict} for ${paperId}`);
    await openPaper(paperId); // status comes back from the server
    await refreshStats();
  } catch (error) {
    el("queue").innerHTML = renderQueue(queue.state); // rolled back state
    const message = error instanceof ApiError ? error.message : String(error);
    toast(message, "error");
  }
}

async function submitProposal(event: Event): Promise<void> {
  event.preventDefault();
  const form: ProposalForm = {
    pattern: (el("proposal-pattern") as HTMLInputElement).value,
    category: (el("proposal-category") as HTMLSelectElement).value as Category,
    expected_phrase:
      (el("proposal-expected") as HTMLInputElement).value.trim() || undefined,
    proposer: assessorName(),
  };
  const problems = validateProposal(form);
  el("proposal-errors").innerHTML = renderFormErrors(problems);
  if (problems.length > 0) {
    return;
  }
  try {
    const created = await api.submitProposal(form);
    toast(`proposal ${created.proposal.proposal_id} submitted`);
    (el("proposal-form") as HTMLFormElement).reset();
  } catch (error) {
    if (error instanceof ApiError && error.errorCode === "conflict") {
      const existing = error.details["existing_id"];
      el("proposal-errors").innerHTML = renderFormErrors([
        `${error.message}${existing ? ` (fingerprint ${existing})` : ""}`,
      ]);
    } else {
      toast(error instanceof ApiError ? error.message : String(error), "error");
    }
  }
}

export function start(): void {
  el("filter-status").addEventListener("change", () => void refreshQueue());
  el("filter-category").addEventListener("change", () => void refreshQueue());
  el("verdict-problematic").addEventListener("click", () =>
    void submitVerdict("problematic"),
  );
  el("verdict-not-problematic").addEventListener("click", () =>
    void submitVerdict("not_problematic"),
  );
  el("verdict-unsure").addEventListener("click", () => void submitVerdict("unsure"));
  el("proposal-form").addEventListener("submit", (e) => void submitProposal(e));
  // stale detail views refresh when the tab regains focus
  window.addEventListener("focus", () => {
    if (openPaperId) {
      void openPaper(openPaperId);
    }
  });
  void refreshQueue();
  void refreshStats();
}

start();
