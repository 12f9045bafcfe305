import { describe, expect, it } from "vitest";

import { ProposalForm } from "../src/types.js";
import { normalizePhrase, validateProposal } from "../src/validation.js";

const base: ProposalForm = {
  pattern: "counterfeit consciousness",
  category: "tortured",
  expected_phrase: "artificial intelligence",
  proposer: "carol",
};

describe("normalizePhrase", () => {
  it("lowercases, strips punctuation, collapses spaces", () => {
    expect(normalizePhrase("  Counterfeit — Consciousness!  ")).toBe(
      "counterfeit consciousness",
    );
  });

  it("keeps apostrophes, folding curly ones", () => {
    expect(normalizePhrase("couldn’t be done")).toBe("couldn't be done");
  });
});

describe("validateProposal", () => {
  it("accepts a well-formed tortured proposal", () => {
    expect(validateProposal(base)).toEqual([]);
  });

  it("rejects single-word patterns before any request is made", () => {
    expect(
      validateProposal({ ...base, pattern: "Network!" }),
    ).toContainEqual(expect.stringContaining("2 words"));
  });

  it("requires expected phrase exactly for tortured entries", () => {
    expect(
      validateProposal({ ...base, expected_phrase: undefined }),
    ).toContainEqual(expect.stringContaining("expected original"));
    expect(
      validateProposal({
        ...base,
        category: "scigen",
        expected_phrase: "whoops",
      }),
    ).toContainEqual(expect.stringContaining("only applies"));
    expect(
      validateProposal({
        pattern: "alpha beta gamma",
        category: "scigen",
        proposer: "x",
      }),
    ).toEqual([]);
  });

  it("requires a proposer", () => {
    expect(validateProposal({ ...base, proposer: "  " })).toContainEqual(
      expect.stringContaining("proposer"),
    );
  });
});
