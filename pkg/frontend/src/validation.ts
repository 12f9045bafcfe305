// Client-side form validation mirroring the server's rules, so obvious
// mistakes never cost a round trip. The server remains authoritative.

import { ProposalForm } from "./types.js";

// Approximation of the server's canonical phrase form, sufficient for
// the ASCII patterns the dictionary format allows: lowercase, map
// non-alphanumeric/apostrophe to spaces, collapse runs, trim.
export function normalizePhrase(raw: string): string {
  return raw
    .replace(/[‘’]/g, "'")
    .toLowerCase()
    .replace(/[^a-z0-9']+/g, " ")
    .trim()
    .replace(/ {2,}/g, " ");
}

export function tokenCount(phrase: string): number {
  return phrase ? phrase.split(" ").length : 0;
}

export function validateProposal(form: ProposalForm): string[] {
  const problems: string[] = [];
  const pattern = normalizePhrase(form.pattern);
  if (tokenCount(pattern) < 2) {
    problems.push("pattern must contain at least 2 words");
  }
  const expected = (form.expected_phrase ?? "").trim();
  if (form.category === "tortured" && !expected) {
    problems.push("tortured phrases need the expected original phrase");
  }
  if (form.category !== "tortured" && expected) {
    problems.push("expected phrase only applies to tortured entries");
  }
  if (!form.proposer.trim()) {
    problems.push("proposer name is required");
  }
  return problems;
}
