"""paperscreen: fingerprint-based screening of scholarly full text.

The pipeline in one sentence: a dictionary of fingerprint phrases
(generator fragments and tortured phrases) is matched against documents
in canonical text form; a harvester turns those fingerprints into
search-index queries and folds the results into a deduplicated suspect
ledger; a REST service lets human assessors confirm or refute each
suspect and feed new fingerprints back into the dictionary.
"""

from .detect import DetectionReport, Detector, detect, explain_hit
from .dictionary import Dictionary, load_dictionary, load_dictionary_file, seed_dictionary
from .grammar import (
    Grammar,
    extract_candidate_fingerprints,
    generate,
    load_grammar,
    load_grammar_file,
    measure_detection_rate,
)
from .harvest import HarvestRun, HarvestScheduler, harvest_once
from .match import MatcherAutomaton, compile, naive_scan, scan
from .model import (
    Assessment,
    Category,
    DetectionHit,
    Fingerprint,
    FingerprintProposal,
    FingerprintStatus,
    PaperRecord,
    ProposalState,
    ScreeningStats,
    ScreeningStatus,
    Verdict,
    derive_status,
    normalize_doi,
    summarize,
)
from .normalize import NormalizedText, normalize
from .search import HttpClientConfig, HttpSearchClient, LocalIndexClient, SearchResult
from .service import Api, create_server
from .store import LedgerStore

__version__ = "0.1.0"

__all__ = [
    "Api",
    "Assessment",
    "Category",
    "DetectionHit",
    "DetectionReport",
    "Detector",
    "Dictionary",
    "Fingerprint",
    "FingerprintProposal",
    "FingerprintStatus",
    "Grammar",
    "HarvestRun",
    "HarvestScheduler",
    "HttpClientConfig",
    "HttpSearchClient",
    "LedgerStore",
    "LocalIndexClient",
    "MatcherAutomaton",
    "NormalizedText",
    "PaperRecord",
    "ProposalState",
    "ScreeningStats",
    "ScreeningStatus",
    "SearchResult",
    "Verdict",
    "compile",
    "create_server",
    "derive_status",
    "detect",
    "explain_hit",
    "extract_candidate_fingerprints",
    "generate",
    "harvest_once",
    "load_dictionary",
    "load_dictionary_file",
    "load_grammar",
    "load_grammar_file",
    "measure_detection_rate",
    "naive_scan",
    "normalize",
    "normalize_doi",
    "scan",
    "seed_dictionary",
    "summarize",
    "__version__",
]
