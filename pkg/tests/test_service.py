"""REST API behavior, at the logic layer and over real HTTP."""

from __future__ import annotations

import json
import threading
import urllib.error
import urllib.request
from datetime import datetime, timedelta, timezone

import pytest

from paperscreen.detect import detect
from paperscreen.errors import ConflictError, NotFoundError, RequestError
from paperscreen.model import Category, PaperRecord, Verdict
from paperscreen.service import Api, create_server
from paperscreen.store import LedgerStore

from conftest import make_fingerprint, make_paper

BASE_FPS = (
    make_fingerprint("fp-0001", "fake neural organization", Category.TORTURED,
                     expected="artificial neural network"),
    make_fingerprint("fp-0002", "though many skeptics said it couldn't be done",
                     Category.SCIGEN),
)


@pytest.fixture
def api(tmp_path):
    store = LedgerStore(tmp_path / "ledger.jsonl", BASE_FPS)
    try:
        yield Api(store)
    finally:
        store.close()


def insert_with_hits(api: Api, paper_id: str, text: str, **kwargs) -> PaperRecord:
    report = detect(text, api.current_dictionary(), paper_id=paper_id)
    paper = make_paper(paper_id, hits=report.hits, **kwargs)
    api.store.upsert_paper(paper)
    return paper


class TestPapersEndpoints:
    def test_empty_ledger_lists_empty_page(self, api):
        status, payload = api.list_papers()
        assert status == 200
        assert payload["items"] == []
        assert payload["total"] == 0

    def test_status_and_category_filters(self, api):
        insert_with_hits(api, "p000001", "uses a fake neural organization")
        insert_with_hits(
            api, "p000002", "though many skeptics said it couldn't be done"
        )
        insert_with_hits(api, "p000003", "clean text")
        api.store.add_assessment("p000001", Verdict.PROBLEMATIC, "alice")

        _, awaiting = api.list_papers(status="awaiting")
        assert {i["paper_id"] for i in awaiting["items"]} == {"p000002", "p000003"}

        _, assessed = api.list_papers(status="assessed")
        assert [i["paper_id"] for i in assessed["items"]] == ["p000001"]
        assert assessed["items"][0]["status"] == {
            "state": "assessed",
            "label": "problematic",
        }

        _, tortured = api.list_papers(category="tortured")
        assert [i["paper_id"] for i in tortured["items"]] == ["p000001"]

    def test_invalid_filters_are_request_errors(self, api):
        with pytest.raises(RequestError):
            api.list_papers(status="weird")
        with pytest.raises(RequestError):
            api.list_papers(category="nonsense")
        with pytest.raises(RequestError):
            api.list_papers(page="0")

    def test_pagination_is_disjoint_and_complete(self, api):
        t0 = datetime(2021, 1, 1, tzinfo=timezone.utc)
        papers = [
            make_paper(f"p{i:06d}", first_seen=t0 + timedelta(minutes=i))
            for i in range(250)
        ]
        api.store.upsert_papers(papers)
        seen: list[str] = []
        for page in (1, 2, 3):
            _, payload = api.list_papers(page=str(page), page_size="100")
            assert payload["total"] == 250
            assert payload["total_pages"] == 3
            seen.extend(item["paper_id"] for item in payload["items"])
        assert len(seen) == 250
        assert len(set(seen)) == 250
        # newest first
        assert seen[0] == "p000249"

    def test_detail_shows_explained_tortured_hit(self, api):
        insert_with_hits(api, "p000001", "we built a fake neural organization")
        status, payload = api.get_paper("p000001")
        assert status == 200
        (hit,) = payload["hits"]
        assert hit["pattern"] == "fake neural organization"
        assert hit["expected_phrase"] == "artificial neural network"
        assert hit["category"] == "tortured"
        assert payload["status"] == {"state": "awaiting", "label": None}
        assert payload["assessments"] == []

    def test_unknown_paper_is_not_found(self, api):
        with pytest.raises(NotFoundError):
            api.get_paper("ghost")


class TestAssessmentsEndpoint:
    def test_first_verdict_flips_status(self, api):
        insert_with_hits(api, "p000001", "a fake neural organization")
        status, payload = api.post_assessment(
            "p000001", {"verdict": "problematic", "assessor": "alice"}
        )
        assert status == 201
        assert payload["assessment"]["verdict"] == "problematic"
        assert payload["assessment"]["timestamp"]  # stamped by the server
        _, detail = api.get_paper("p000001")
        assert detail["status"] == {"state": "assessed", "label": "problematic"}

    def test_opposite_verdict_becomes_unsure(self, api):
        insert_with_hits(api, "p000001", "a fake neural organization")
        api.post_assessment("p000001", {"verdict": "problematic", "assessor": "a"})
        api.post_assessment("p000001", {"verdict": "not_problematic", "assessor": "b"})
        _, detail = api.get_paper("p000001")
        assert detail["status"] == {"state": "assessed", "label": "unsure"}
        assert [a["assessor"] for a in detail["assessments"]] == ["a", "b"]

    def test_unknown_paper_leaves_ledger_unchanged(self, api):
        with pytest.raises(NotFoundError):
            api.post_assessment("ghost", {"verdict": "unsure", "assessor": "a"})
        assert api.store.assessments() == []

    def test_invalid_verdict_rejected(self, api):
        insert_with_hits(api, "p000001", "x y")
        with pytest.raises(RequestError):
            api.post_assessment("p000001", {"verdict": "meh", "assessor": "a"})

    def test_stats_conservation_across_assessment(self, api):
        insert_with_hits(api, "p000001", "clean")
        insert_with_hits(api, "p000002", "clean")
        _, before = api.get_stats()
        api.post_assessment("p000001", {"verdict": "unsure", "assessor": "a"})
        _, after = api.get_stats()
        assert after["total_suspects"] == before["total_suspects"] == 2
        assert after["awaiting"] == before["awaiting"] - 1
        assert after["assessed"] == before["assessed"] + 1


class TestProposalsEndpoint:
    def test_valid_tortured_proposal_is_stored_open(self, api):
        status, payload = api.post_proposal(
            {
                "pattern": "Counterfeit Consciousness",
                "category": "tortured",
                "expected_phrase": "artificial intelligence",
                "proposer": "carol",
            }
        )
        assert status == 201
        proposal = payload["proposal"]
        assert proposal["state"] == "open"
        assert proposal["pattern"] == "counterfeit consciousness"  # normalized

    def test_duplicate_of_active_fingerprint_conflicts_with_reference(self, api):
        with pytest.raises(ConflictError) as err:
            api.post_proposal(
                {
                    "pattern": "fake neural organization",
                    "category": "tortured",
                    "expected_phrase": "artificial neural network",
                    "proposer": "carol",
                }
            )
        assert err.value.details["existing_id"] == "fp-0001"

    def test_single_token_pattern_rejected(self, api):
        with pytest.raises(RequestError, match="2 tokens"):
            api.post_proposal(
                {"pattern": "network", "category": "scigen", "proposer": "c"}
            )

    def test_tortured_requires_expected_phrase(self, api):
        with pytest.raises(RequestError):
            api.post_proposal(
                {"pattern": "profound learning", "category": "tortured",
                 "proposer": "c"}
            )

    def test_approve_bumps_dictionary_version(self, api):
        _, created = api.post_proposal(
            {"pattern": "profound learning", "category": "tortured",
             "expected_phrase": "deep learning", "proposer": "c"}
        )
        proposal_id = created["proposal"]["proposal_id"]
        status, resolved = api.resolve_proposal(proposal_id, {"decision": "approve"})
        assert status == 200
        assert resolved["proposal"]["state"] == "approved"
        assert resolved["dictionary_version"] == 2
        _, dictionary = api.get_dictionary()
        assert dictionary["version"] == 2
        patterns = [f["pattern"] for f in dictionary["fingerprints"]]
        assert "profound learning" in patterns

    def test_reject_leaves_dictionary_alone(self, api):
        _, created = api.post_proposal(
            {"pattern": "profound learning", "category": "tortured",
             "expected_phrase": "deep learning", "proposer": "c"}
        )
        api.resolve_proposal(
            created["proposal"]["proposal_id"],
            {"decision": "reject", "note": "already covered"},
        )
        _, dictionary = api.get_dictionary()
        assert dictionary["version"] == 1

    def test_double_approve_conflicts_once(self, api):
        _, created = api.post_proposal(
            {"pattern": "profound learning", "category": "tortured",
             "expected_phrase": "deep learning", "proposer": "c"}
        )
        proposal_id = created["proposal"]["proposal_id"]
        api.resolve_proposal(proposal_id, {"decision": "approve"})
        with pytest.raises(ConflictError):
            api.resolve_proposal(proposal_id, {"decision": "approve"})
        _, dictionary = api.get_dictionary()
        added = [f for f in dictionary["fingerprints"] if f["id"].startswith("fp-a")]
        assert len(added) == 1

    def test_list_proposals_filters_by_state(self, api):
        api.post_proposal(
            {"pattern": "alpha beta", "category": "scigen", "proposer": "c"}
        )
        _, created = api.post_proposal(
            {"pattern": "gamma delta", "category": "scigen", "proposer": "c"}
        )
        api.resolve_proposal(
            created["proposal"]["proposal_id"], {"decision": "reject"}
        )
        _, open_items = api.list_proposals(state="open")
        assert [p["pattern"] for p in open_items["items"]] == ["alpha beta"]
        _, all_items = api.list_proposals()
        assert len(all_items["items"]) == 2


# ---------------------------------------------------------------------------
# full HTTP integration


def http(base: str, method: str, path: str, body: dict | None = None):
    data = json.dumps(body).encode() if body is not None else None
    request = urllib.request.Request(
        base + path, data=data, method=method,
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(request, timeout=10) as response:
            return response.status, json.loads(response.read())
    except urllib.error.HTTPError as error:
        return error.code, json.loads(error.read())


@pytest.fixture
def live_server(tmp_path):
    store = LedgerStore(tmp_path / "ledger.jsonl", BASE_FPS)
    api = Api(store)
    server = create_server(api, port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    try:
        yield f"http://{host}:{port}", api
    finally:
        server.shutdown()
        thread.join()
        server.server_close()
        store.close()


class TestOverHttp:
    def test_healthz(self, live_server):
        base, _ = live_server
        assert http(base, "GET", "/api/healthz") == (200, {"status": "ok"})

    def test_full_assessment_flow(self, live_server):
        base, api = live_server
        insert_with_hits(api, "p000001", "one fake neural organization")
        status, listing = http(base, "GET", "/api/papers?status=awaiting")
        assert status == 200
        assert listing["total"] == 1

        status, payload = http(
            base, "POST", "/api/papers/p000001/assessments",
            {"verdict": "problematic", "assessor": "alice", "note": "obvious"},
        )
        assert status == 201

        # read-your-writes through a second connection
        status, detail = http(base, "GET", "/api/papers/p000001")
        assert detail["status"]["label"] == "problematic"
        status, listing = http(base, "GET", "/api/papers?status=awaiting")
        assert listing["total"] == 0

    def test_error_envelope_shape(self, live_server):
        base, _ = live_server
        status, payload = http(base, "GET", "/api/papers/ghost")
        assert status == 404
        assert payload["error_code"] == "not_found"
        assert "ghost" in payload["message"]

        status, payload = http(base, "GET", "/api/papers?status=bogus")
        assert status == 400
        assert payload["error_code"] == "invalid_request"

        status, payload = http(base, "POST", "/api/proposals",
                               {"pattern": "fake neural organization",
                                "category": "tortured",
                                "expected_phrase": "artificial neural network",
                                "proposer": "x"})
        assert status == 409
        assert payload["error_code"] == "conflict"
        assert payload["details"]["existing_id"] == "fp-0001"

    def test_unknown_route_404(self, live_server):
        base, _ = live_server
        status, payload = http(base, "GET", "/api/unknown")
        assert status == 404

    def test_bad_json_body_is_400(self, live_server):
        base, _ = live_server
        request = urllib.request.Request(
            base + "/api/proposals", data=b"not json", method="POST",
            headers={"Content-Type": "application/json"},
        )
        try:
            with urllib.request.urlopen(request, timeout=10) as response:
                status = response.status
                payload = json.loads(response.read())
        except urllib.error.HTTPError as error:
            status, payload = error.code, json.loads(error.read())
        assert status == 400
        assert payload["error_code"] == "invalid_request"


def test_write_rate_limit(tmp_path):
    store = LedgerStore(tmp_path / "ledger.jsonl", BASE_FPS)
    api = Api(store)
    api.store.upsert_paper(make_paper("p000001"))
    server = create_server(api, port=0, write_rate_limit_per_minute=2)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    base = f"http://{host}:{port}"
    try:
        codes = []
        for _ in range(3):
            status, _ = http(
                base, "POST", "/api/papers/p000001/assessments",
                {"verdict": "unsure", "assessor": "a"},
            )
            codes.append(status)
        assert codes == [201, 201, 429]
        # reads are never limited
        assert http(base, "GET", "/api/stats")[0] == 200
    finally:
        server.shutdown()
        thread.join()
        server.server_close()
        store.close()
