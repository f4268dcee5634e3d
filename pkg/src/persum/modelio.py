"""Uniform access to chat-completion endpoints and external scorers, with
disk caching, bounded retries, and a seeded mock transport for tests."""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .errors import ConfigError, ProtocolError, TransportError

DEFAULT_GENERATION_PARAMS = {"temperature": 0.7, "max_tokens": 512, "top_p": 1.0}
DEFAULT_JUDGE_PARAMS = {"temperature": 0.0, "max_tokens": 16, "top_p": 1.0}


@dataclass(frozen=True)
class ModelEndpoint:
    name: str
    base_url: str
    model_id: str
    params: dict = field(default_factory=lambda: dict(DEFAULT_GENERATION_PARAMS))
    auth_env: str | None = None
    mock_seed: int = 0

    def __post_init__(self):
        if self.params.get("temperature", 0.0) < 0:
            raise ConfigError(f"endpoint {self.name}: temperature must be >= 0")


@dataclass(frozen=True)
class ScorerEndpoint:
    name: str
    base_url: str


def cache_key(endpoint: ModelEndpoint, rendered_prompt: str, sample_index: int) -> str:
    """Digest of everything that determines a completion."""
    payload = json.dumps(
        {
            "endpoint": endpoint.name,
            "model_id": endpoint.model_id,
            "params": {k: endpoint.params[k] for k in sorted(endpoint.params)},
            "prompt": rendered_prompt,
            "sample_index": sample_index,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _seeded_words(digest_material: str, n_words: int) -> str:
    seed = int.from_bytes(
        hashlib.sha256(digest_material.encode("utf-8")).digest()[:8], "big"
    )
    rng = random.Random(seed)
    vocab = (
        "policy reform voters leaders debate economy rights coverage budget "
        "healthcare security climate election accountability states court "
        "spending taxes growth jobs immigration education energy crime"
    ).split()
    return " ".join(rng.choice(vocab) for _ in range(n_words))


def mock_transport(endpoint: ModelEndpoint, prompt: str, sample_index: int) -> str:
    """Deterministic stand-in endpoint, dispatched on the prompt's task.

    ``mock://echo`` returns the prompt unchanged. ``mock://auto`` honours the
    shipped prompt contracts: judge prompts get a digit, paraphrase/reversal
    prompts get conforming key points, summary prompts get the required
    perspective prefix. Greedy decoding (temperature 0) ignores sample_index.
    """
    behavior = endpoint.base_url.removeprefix("mock://")
    if behavior == "echo":
        return prompt
    if behavior != "auto":
        raise ConfigError(f"unknown mock behavior: {behavior}")
    effective_index = 0 if endpoint.params.get("temperature", 0.0) == 0 else sample_index
    material = f"{endpoint.mock_seed}|{endpoint.model_id}|{prompt}|{effective_index}"

    if "Score (1~5 only):" in prompt:
        seed = int.from_bytes(
            hashlib.sha256(material.encode("utf-8")).digest()[:8], "big"
        )
        return str(1 + seed % 5)
    if 'starting with "The article argues":' in prompt:
        return "The article argues " + _seeded_words(material, 8) + "."
    if prompt.endswith("REVERSED:"):
        return "The article argues the opposite: " + _seeded_words(material, 8) + "."
    for side in ("Left", "Right"):
        if f"starting with 'The {side} '" in prompt:
            return f"The {side} " + _seeded_words(material, 10) + "."
    return _seeded_words(material, 12) + "."


def http_transport(endpoint: ModelEndpoint, prompt: str, sample_index: int) -> str:
    """POST a chat completion request and return the completion text."""
    import os

    headers = {"Content-Type": "application/json"}
    if endpoint.auth_env:
        token = os.environ.get(endpoint.auth_env)
        if not token:
            raise ConfigError(
                f"endpoint {endpoint.name}: env var {endpoint.auth_env} is unset"
            )
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": endpoint.model_id,
        "messages": [{"role": "user", "content": prompt}],
        **{k: v for k, v in endpoint.params.items() if v is not None},
    }
    resp = requests.post(endpoint.base_url, json=body, headers=headers, timeout=120)
    resp.raise_for_status()
    try:
        payload = resp.json()
        return payload["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise ProtocolError(f"malformed completion reply: {exc}") from exc


def http_scorer_transport(scorer: ScorerEndpoint, context: str, claim: str) -> float:
    resp = requests.post(
        scorer.base_url, json={"context": context, "claim": claim}, timeout=120
    )
    resp.raise_for_status()
    try:
        return resp.json()["score"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ProtocolError(f"malformed scorer reply: {exc}") from exc


class ModelClient:
    """Shared, thread-safe gateway to all configured endpoints.

    Completions are cached on disk keyed by :func:`cache_key`; transport
    failures are retried with exponential backoff; a global semaphore bounds
    in-flight requests across every module.
    """

    def __init__(
        self,
        endpoints: list[ModelEndpoint] | None = None,
        scorers: list[ScorerEndpoint] | None = None,
        cache_dir: str | Path | None = None,
        transport=None,
        scorer_transport=None,
        max_parallel: int = 8,
        retries: int = 3,
        backoff_base: float = 1.0,
    ):
        self.endpoints = {}
        for ep in endpoints or []:
            if ep.name in self.endpoints:
                raise ConfigError(f"duplicate endpoint name: {ep.name}")
            self.endpoints[ep.name] = ep
        self.scorers = {s.name: s for s in scorers or []}
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._transport = transport
        self._scorer_transport = scorer_transport or http_scorer_transport
        self.max_parallel = max_parallel
        self._semaphore = threading.BoundedSemaphore(max_parallel)
        self._cache_lock = threading.Lock()
        self._call_lock = threading.Lock()
        self.retries = retries
        self.backoff_base = backoff_base
        self.calls = 0  # transport invocations, cache hits excluded

    def endpoint(self, name: str) -> ModelEndpoint:
        if name not in self.endpoints:
            raise ConfigError(f"unknown endpoint: {name}")
        return self.endpoints[name]

    def _resolve_transport(self, endpoint: ModelEndpoint):
        if self._transport is not None:
            return self._transport
        if endpoint.base_url.startswith("mock://"):
            return mock_transport
        return http_transport

    def _cache_path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def _cache_get(self, key: str) -> str | None:
        if not self.cache_dir:
            return None
        with self._cache_lock:
            path = self._cache_path(key)
            if not path.exists():
                return None
            return json.loads(path.read_text(encoding="utf-8"))["completion"]

    def _cache_put(self, key: str, endpoint: ModelEndpoint, prompt: str, completion: str):
        if not self.cache_dir:
            return
        with self._cache_lock:
            record = {
                "endpoint": endpoint.name,
                "model_id": endpoint.model_id,
                "prompt_sha256": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
                "completion": completion,
            }
            tmp = self._cache_path(key).with_suffix(".tmp")
            tmp.write_text(json.dumps(record, ensure_ascii=False), encoding="utf-8")
            tmp.replace(self._cache_path(key))

    def complete(
        self, endpoint_name: str, rendered_prompt: str, sample_index: int = 0
    ) -> str:
        """Return the completion for a rendered prompt.

        Distinct sample_index values map to distinct cache entries so that
        best-of-N sampling stays reproducible with a warm cache.
        """
        endpoint = self.endpoint(endpoint_name)
        key = cache_key(endpoint, rendered_prompt, sample_index)
        cached = self._cache_get(key)
        if cached is not None:
            return cached
        transport = self._resolve_transport(endpoint)
        attempts = []
        for attempt in range(self.retries):
            try:
                with self._semaphore:
                    with self._call_lock:
                        self.calls += 1
                    completion = transport(endpoint, rendered_prompt, sample_index)
                if not isinstance(completion, str):
                    raise ProtocolError(
                        f"endpoint {endpoint_name} returned {type(completion).__name__}"
                    )
                self._cache_put(key, endpoint, rendered_prompt, completion)
                return completion
            except (ProtocolError, ConfigError):
                raise
            except Exception as exc:  # transport-level failure; retry
                attempts.append(f"attempt {attempt + 1}: {exc}")
                if attempt + 1 < self.retries:
                    time.sleep(self.backoff_base * (2**attempt))
        raise TransportError(
            f"endpoint {endpoint_name} failed after {self.retries} attempts", attempts
        )

    def external_score(self, scorer_name: str, context: str, claim: str) -> float:
        """Ask an external scorer for a scalar in [0, 1]; never clamps."""
        if scorer_name not in self.scorers:
            raise ConfigError(f"unknown scorer: {scorer_name}")
        scorer = self.scorers[scorer_name]
        attempts = []
        for attempt in range(self.retries):
            try:
                with self._semaphore:
                    with self._call_lock:
                        self.calls += 1
                    score = self._scorer_transport(scorer, context, claim)
                break
            except (ProtocolError, ConfigError):
                raise
            except Exception as exc:
                attempts.append(f"attempt {attempt + 1}: {exc}")
                if attempt + 1 < self.retries:
                    time.sleep(self.backoff_base * (2**attempt))
        else:
            raise TransportError(
                f"scorer {scorer_name} failed after {self.retries} attempts", attempts
            )
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ProtocolError(f"scorer {scorer_name} returned non-numeric score")
        if not 0.0 <= score <= 1.0:
            raise ProtocolError(
                f"scorer {scorer_name} returned out-of-range score {score}"
            )
        return float(score)


def _parse_endpoint(raw: dict, defaults: dict) -> ModelEndpoint:
    for req in ("name", "base_url", "model_id"):
        if req not in raw:
            raise ConfigError(f"endpoint entry missing field: {req}")
    params = {**defaults, **raw.get("params", {})}
    return ModelEndpoint(
        name=raw["name"],
        base_url=raw["base_url"],
        model_id=raw["model_id"],
        params=params,
        auth_env=raw.get("auth_env"),
        mock_seed=raw.get("mock_seed", 0),
    )


def load_client(config_path: str | Path, transport=None, scorer_transport=None) -> ModelClient:
    """Build a client from an endpoint config file (JSON).

    Schema: {"default_params": {...}, "endpoints": [{name, base_url, model_id,
    params?, auth_env?, mock_seed?}], "scorers": [{name, base_url}],
    "max_parallel"?, "retries"?, "backoff_base"?, "cache_dir"?}. Secrets are
    read from the environment variables named by ``auth_env``.
    """
    path = Path(config_path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read endpoint config {path}: {exc}") from exc
    defaults = {**DEFAULT_GENERATION_PARAMS, **raw.get("default_params", {})}
    endpoints = [_parse_endpoint(e, defaults) for e in raw.get("endpoints", [])]
    scorers = [
        ScorerEndpoint(s["name"], s["base_url"]) for s in raw.get("scorers", [])
    ]
    return ModelClient(
        endpoints=endpoints,
        scorers=scorers,
        cache_dir=raw.get("cache_dir"),
        transport=transport,
        scorer_transport=scorer_transport,
        max_parallel=raw.get("max_parallel", 8),
        retries=raw.get("retries", 3),
        backoff_base=raw.get("backoff_base", 1.0),
    )


def mock_client(
    seed: int = 0,
    behavior: str = "auto",
    judge_names: tuple[str, str] = ("judge_coverage", "judge_faithfulness"),
    cache_dir: str | Path | None = None,
    max_parallel: int = 8,
) -> ModelClient:
    """Client with one generation endpoint and two judge endpoints, all mocked."""
    url = f"mock://{behavior}"
    endpoints = [
        ModelEndpoint(
            "generator", url, "mock-generator",
            params=dict(DEFAULT_GENERATION_PARAMS), mock_seed=seed,
        ),
        ModelEndpoint(
            judge_names[0], url, "mock-judge-coverage",
            params=dict(DEFAULT_JUDGE_PARAMS), mock_seed=seed,
        ),
        ModelEndpoint(
            judge_names[1], url, "mock-judge-faithfulness",
            params=dict(DEFAULT_JUDGE_PARAMS), mock_seed=seed + 1,
        ),
    ]
    return ModelClient(
        endpoints=endpoints,
        cache_dir=cache_dir,
        backoff_base=0.0,
        max_parallel=max_parallel,
    )
