"""Service configuration: one JSON file wires every component together.

Relative paths are resolved against the directory containing the config
file, so a deployment directory is self-contained. See the README for
the documented format and a worked example.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dictionary import Dictionary, load_dictionary_file
from .errors import ConfigError
from .search import HttpClientConfig, HttpSearchClient, LocalIndexClient, SearchClient
from .store import LedgerStore

MIN_PRODUCTION_INTERVAL = 60.0


@dataclass(frozen=True)
class HarvestConfig:
    interval_seconds: float = 3600.0
    allow_short_interval: bool = False
    failure_threshold: int = 5
    allowlist: tuple[str, ...] = ()


@dataclass(frozen=True)
class LocalSearchConfig:
    corpus_path: Path = Path("corpus.jsonl")
    page_size: int = 50


@dataclass(frozen=True)
class ServiceConfig:
    listen_host: str = "127.0.0.1"
    listen_port: int = 8571
    store_path: Path = Path("ledger.jsonl")
    dictionary_path: Path | None = None
    harvest: HarvestConfig = field(default_factory=HarvestConfig)
    search_kind: str = "local"
    local_search: LocalSearchConfig | None = None
    http_search: HttpClientConfig | None = None
    write_rate_limit_per_minute: float | None = None


def _require(data: dict, key: str, context: str) -> object:
    if key not in data:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return data[key]


def load_config(path: str | Path) -> ServiceConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    base_dir = path.parent

    def resolve(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base_dir / p

    listen = data.get("listen", "127.0.0.1:8571")
    host, _, port_text = str(listen).rpartition(":")
    if not host or not port_text.isdigit():
        raise ConfigError(f"{path}: listen must be host:port, got {listen!r}")

    harvest_data = data.get("harvest", {})
    harvest = HarvestConfig(
        interval_seconds=float(harvest_data.get("interval_seconds", 3600.0)),
        allow_short_interval=bool(harvest_data.get("allow_short_interval", False)),
        failure_threshold=int(harvest_data.get("failure_threshold", 5)),
        allowlist=tuple(harvest_data.get("allowlist", ())),
    )
    if (
        harvest.interval_seconds < MIN_PRODUCTION_INTERVAL
        and not harvest.allow_short_interval
    ):
        raise ConfigError(
            f"{path}: harvest.interval_seconds below {MIN_PRODUCTION_INTERVAL:.0f} "
            "requires harvest.allow_short_interval (test configurations only)"
        )

    client_data = data.get("search_client", {"kind": "local"})
    kind = client_data.get("kind")
    local_search: LocalSearchConfig | None = None
    http_search: HttpClientConfig | None = None
    if kind == "local":
        local_search = LocalSearchConfig(
            corpus_path=resolve(str(_require(client_data, "corpus_path", "search_client"))),
            page_size=int(client_data.get("page_size", 50)),
        )
    elif kind == "http":
        known = {f for f in HttpClientConfig.__dataclass_fields__}
        kwargs = {k: v for k, v in client_data.items() if k in known}
        if "base_url" not in kwargs:
            raise ConfigError(f"{path}: search_client.base_url is required")
        http_search = HttpClientConfig(**kwargs)
    else:
        raise ConfigError(
            f"{path}: search_client.kind must be 'local' or 'http', got {kind!r}"
        )

    rate_limits = data.get("rate_limits", {})
    write_limit = rate_limits.get("write_per_minute")

    dictionary_path = data.get("dictionary_path")
    return ServiceConfig(
        listen_host=host,
        listen_port=int(port_text),
        store_path=resolve(str(_require(data, "store_path", str(path)))),
        dictionary_path=resolve(str(dictionary_path)) if dictionary_path else None,
        harvest=harvest,
        search_kind=kind,
        local_search=local_search,
        http_search=http_search,
        write_rate_limit_per_minute=(
            float(write_limit) if write_limit is not None else None
        ),
    )


def load_base_dictionary(config: ServiceConfig) -> Dictionary:
    """The file-backed part of the dictionary (version 1)."""
    if config.dictionary_path is None:
        return Dictionary((), loaded_from="<none>")
    return load_dictionary_file(config.dictionary_path)


def open_store(config: ServiceConfig) -> LedgerStore:
    base = load_base_dictionary(config)
    return LedgerStore(config.store_path, base.fingerprints)


def build_search_client(config: ServiceConfig) -> SearchClient:
    if config.search_kind == "local":
        assert config.local_search is not None
        return LocalIndexClient(
            config.local_search.corpus_path, config.local_search.page_size
        )
    assert config.http_search is not None
    return HttpSearchClient(config.http_search)
