"""Ledger store: durability, dedup enforcement, proposal atomicity, backup."""

from __future__ import annotations

import threading
from datetime import datetime, timedelta, timezone

import pytest

from paperscreen.errors import ConflictError, NotFoundError, StoreError
from paperscreen.model import (
    Category,
    FingerprintStatus,
    PaperRecord,
    ProposalState,
    Verdict,
)
from paperscreen.store import LedgerStore

from conftest import T0, make_fingerprint, make_hit, make_paper

BASE = (
    make_fingerprint("fp-0001", "fake neural organization", Category.TORTURED,
                     expected="artificial neural network"),
    make_fingerprint("fp-0002", "though many skeptics said it couldn't be done",
                     Category.SCIGEN),
)


class TickingClock:
    def __init__(self) -> None:
        self.now = datetime(2021, 10, 1, tzinfo=timezone.utc)

    def __call__(self) -> datetime:
        self.now += timedelta(seconds=1)
        return self.now


@pytest.fixture
def store(tmp_path):
    with LedgerStore(tmp_path / "ledger.jsonl", BASE, clock=TickingClock()) as s:
        yield s


class TestDurability:
    def test_state_survives_reopen(self, tmp_path):
        path = tmp_path / "ledger.jsonl"
        with LedgerStore(path, BASE, clock=TickingClock()) as store:
            store.upsert_paper(make_paper("p000001", doi="10.1/a"))
            store.add_assessment("p000001", Verdict.PROBLEMATIC, "alice", "note")
            proposal = store.add_proposal(
                "counterfeit cognition", Category.TORTURED,
                "artificial cognition", "bob",
            )
            store.resolve_proposal(proposal.proposal_id, "approve")

        with LedgerStore(path, BASE) as reopened:
            assert [p.paper_id for p in reopened.papers()] == ["p000001"]
            (assessment,) = reopened.assessments("p000001")
            assert assessment.verdict is Verdict.PROBLEMATIC
            assert assessment.note == "note"
            (stored,) = reopened.proposals()
            assert stored.state is ProposalState.APPROVED
            assert reopened.dictionary_version == 2
            patterns = [f.pattern for f in reopened.fingerprints()]
            assert "counterfeit cognition" in patterns

    def test_torn_final_line_is_discarded(self, tmp_path):
        path = tmp_path / "ledger.jsonl"
        with LedgerStore(path, BASE) as store:
            store.upsert_paper(make_paper("p000001"))
        with open(path, "a", encoding="utf-8") as handle:
            handle.write('{"event": "paper", "paper": {"paper_id"')
        with LedgerStore(path, BASE) as reopened:
            assert len(reopened.papers()) == 1

    def test_corruption_before_the_end_refuses_to_load(self, tmp_path):
        path = tmp_path / "ledger.jsonl"
        with LedgerStore(path, BASE) as store:
            store.upsert_paper(make_paper("p000001"))
        lines = path.read_text(encoding="utf-8").splitlines()
        lines[1] = "garbage {"
        lines.append('{"event": "paper", "paper": {}}')
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(StoreError):
            LedgerStore(path, BASE)

    def test_wrong_schema_rejected(self, tmp_path):
        path = tmp_path / "ledger.jsonl"
        path.write_text('{"event": "header", "kind": "x", "schema": 99}\n')
        with pytest.raises(StoreError, match="schema"):
            LedgerStore(path, BASE)


class TestDedup:
    def test_same_doi_different_paper_conflicts(self, store):
        store.upsert_paper(make_paper("p000001", doi="10.1/a"))
        with pytest.raises(ConflictError):
            store.upsert_paper(make_paper("p000002", doi="10.1/a"))

    def test_doi_comparison_is_normalized(self, store):
        store.upsert_paper(make_paper("p000001", doi="10.1/AbC"))
        assert store.find_by_doi("https://doi.org/10.1/abc") is not None
        with pytest.raises(ConflictError):
            store.upsert_paper(
                make_paper("p000002", doi="HTTPS://DOI.ORG/10.1/ABC")
            )

    def test_same_external_id_conflicts(self, store):
        store.upsert_paper(make_paper("p000001"))
        with pytest.raises(ConflictError):
            store.upsert_paper(
                PaperRecord(paper_id="p000002", external_id="ext-p000001",
                            first_seen=T0)
            )

    def test_update_same_paper_is_fine(self, store):
        store.upsert_paper(make_paper("p000001", doi="10.1/a"))
        store.upsert_paper(make_paper("p000001", doi="10.1/a", title="now titled"))
        assert store.get_paper("p000001").title == "now titled"
        assert len(store.papers()) == 1

    def test_bulk_upsert_rolls_back_on_conflict(self, store):
        store.upsert_paper(make_paper("p000001", doi="10.1/a"))
        batch = [
            make_paper("p000002", doi="10.1/b"),
            make_paper("p000003", doi="10.1/a"),  # conflicts
        ]
        with pytest.raises(ConflictError):
            store.upsert_papers(batch)
        assert store.get_paper("p000002") is None
        assert len(store.papers()) == 1

    def test_new_paper_id_skips_existing(self, store):
        store.upsert_paper(make_paper("p000001"))
        assert store.new_paper_id() == "p000002"


class TestAssessments:
    def test_timestamp_is_stamped_by_store(self, store):
        store.upsert_paper(make_paper("p000001"))
        a1 = store.add_assessment("p000001", Verdict.PROBLEMATIC, "alice")
        a2 = store.add_assessment("p000001", Verdict.UNSURE, "bob")
        assert a1.timestamp < a2.timestamp
        assert store.assessments("p000001") == [a1, a2]

    def test_unknown_paper_rejected(self, store):
        with pytest.raises(NotFoundError):
            store.add_assessment("ghost", Verdict.UNSURE, "alice")

    def test_stats_match_summarize(self, store):
        store.upsert_paper(make_paper("p000001", hits=[make_hit("fp-0001", 0, 4)]))
        store.upsert_paper(make_paper("p000002"))
        store.add_assessment("p000001", Verdict.PROBLEMATIC, "alice")
        stats = store.stats()
        assert stats.total_suspects == 2
        assert stats.assessed == 1
        assert stats.awaiting == 1
        assert stats.per_category_counts[Category.TORTURED] == 1


class TestProposals:
    def test_duplicate_of_live_fingerprint_rejected_with_reference(self, store):
        with pytest.raises(ConflictError) as err:
            store.add_proposal(
                "fake neural organization", Category.TORTURED,
                "artificial neural network", "mallory",
            )
        assert err.value.details == {"existing_id": "fp-0001"}

    def test_reject_leaves_dictionary_unchanged(self, store):
        proposal = store.add_proposal(
            "counterfeit cognition", Category.TORTURED, "artificial cognition", "bob"
        )
        before = store.dictionary_version
        updated, fingerprint = store.resolve_proposal(
            proposal.proposal_id, "reject", note="not convincing"
        )
        assert updated.state is ProposalState.REJECTED
        assert updated.resolution_note == "not convincing"
        assert fingerprint is None
        assert store.dictionary_version == before

    def test_approve_creates_fingerprint_and_bumps_version(self, store):
        proposal = store.add_proposal(
            "counterfeit cognition", Category.TORTURED, "artificial cognition", "bob"
        )
        updated, fingerprint = store.resolve_proposal(proposal.proposal_id, "approve")
        assert updated.state is ProposalState.APPROVED
        assert fingerprint is not None
        assert fingerprint.status is FingerprintStatus.ACTIVE
        assert fingerprint.expected_phrase == "artificial cognition"
        assert store.dictionary_version == 2
        dictionary = store.current_dictionary()
        assert dictionary.version == 2
        assert dictionary.by_id(fingerprint.id) is not None

    def test_double_resolution_conflicts(self, store):
        proposal = store.add_proposal(
            "counterfeit cognition", Category.TORTURED, "artificial cognition", "bob"
        )
        store.resolve_proposal(proposal.proposal_id, "reject")
        with pytest.raises(ConflictError):
            store.resolve_proposal(proposal.proposal_id, "approve")

    def test_unknown_proposal_not_found(self, store):
        with pytest.raises(NotFoundError):
            store.resolve_proposal("prop-999", "approve")

    def test_concurrent_approval_yields_exactly_one_fingerprint(self, store):
        proposal = store.add_proposal(
            "counterfeit cognition", Category.TORTURED, "artificial cognition", "bob"
        )
        outcomes: list[str] = []
        lock = threading.Lock()

        def attempt() -> None:
            try:
                store.resolve_proposal(proposal.proposal_id, "approve")
                result = "approved"
            except ConflictError:
                result = "conflict"
            with lock:
                outcomes.append(result)

        threads = [threading.Thread(target=attempt) for _ in range(100)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert outcomes.count("approved") == 1
        assert outcomes.count("conflict") == 99
        added = [f for f in store.fingerprints() if f.id.startswith("fp-a")]
        assert len(added) == 1
        assert store.dictionary_version == 2


class TestExport:
    def test_export_is_loadable_and_equal(self, store, tmp_path):
        store.upsert_paper(make_paper("p000001", doi="10.1/a",
                                      hits=[make_hit("fp-0001", 0, 4)]))
        store.add_assessment("p000001", Verdict.NOT_PROBLEMATIC, "carol")
        proposal = store.add_proposal(
            "counterfeit cognition", Category.TORTURED, "artificial cognition", "bob"
        )
        store.resolve_proposal(proposal.proposal_id, "approve")

        backup = tmp_path / "backup.jsonl"
        store.export_jsonl(backup)
        with LedgerStore(backup, BASE) as restored:
            assert restored.papers() == store.papers()
            assert restored.assessments() == store.assessments()
            assert restored.proposals() == store.proposals()
            assert restored.fingerprints() == store.fingerprints()
            assert restored.dictionary_version == store.dictionary_version
