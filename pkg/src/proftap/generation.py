"""Title-conditioned generation across model adapters.

Raw model output rarely is a bare poem: models echo the title, add prose
commentary, or wrap everything in markdown. ``postprocess`` reduces raw
output to a poem body with a fixed, versioned rule set, and
``generate_poem`` retries generation until the cleaned body passes the
anti-plagiarism screen (bounded by ``max_attempts``).

Three adapters ship: an OpenAI-compatible HTTP chat client, a
replay-from-directory adapter for reproducible runs over pre-generated
outputs, and a deterministic stub for tests and dry runs.
"""

from __future__ import annotations

import hashlib
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from random import Random
from typing import Callable, Protocol, Sequence

import httpx

from .antiplag import LineIndex, MatchMode, find_duplication
from .corpus import Poem, Source, normalize_text
from .errors import (
    AdapterError,
    GenerationExhaustedError,
    PostprocessError,
    TemplateError,
)
from .randutil import derive_seed, derive_token

PLACEHOLDER = "{{title}}"

DEFAULT_PROMPT_TEMPLATE = (
    "想象你是一位著名诗人，请你写一首题为《{{title}}》的古诗。"
    "要让别人以为你的诗是真人所作，不要让人看出是机器生成的。"
)

POSTPROCESS_RULES_VERSION = "1"

# Leading labels models prepend to the poem proper.
LABEL_PREFIXES = (
    "诗：", "诗:", "内容：", "内容:", "正文：", "正文:",
    "Poem:", "poem:", "标题：", "标题:", "题目：", "题目:",
)

MAX_NON_CJK_RATIO = 0.3

_MARKDOWN_CHARS = re.compile(r"[*_`#>]+")
_CODE_FENCE = re.compile(r"^\s*```")


@dataclass(frozen=True)
class PromptTemplate:
    template: str

    def __post_init__(self) -> None:
        count = self.template.count(PLACEHOLDER)
        if count != 1:
            raise TemplateError(
                f"template must contain {PLACEHOLDER!r} exactly once, found {count}"
            )


def render_prompt(template: PromptTemplate, title: str) -> str:
    """Substitute the title verbatim; nothing else changes."""
    return template.template.replace(PLACEHOLDER, title)


def _is_cjk(ch: str) -> bool:
    code = ord(ch)
    return (
        0x4E00 <= code <= 0x9FFF
        or 0x3400 <= code <= 0x4DBF
        or 0xF900 <= code <= 0xFAFF
        or 0x20000 <= code <= 0x2A6DF
        or 0x3000 <= code <= 0x303F  # CJK punctuation
        or 0xFF00 <= code <= 0xFFEF  # fullwidth forms
    )


def _non_cjk_ratio(line: str) -> float:
    chars = [ch for ch in line if not ch.isspace()]
    if not chars:
        return 1.0
    return sum(1 for ch in chars if not _is_cjk(ch)) / len(chars)


def postprocess(raw: str, title: str) -> str:
    """Reduce raw model output to the poem body.

    Rule set (version ``POSTPROCESS_RULES_VERSION``), applied line-wise
    after newline normalization:

    1. code-fence lines dropped, markdown emphasis characters stripped
    2. lines containing the bracketed title 《title》 dropped
    3. a known label prefix at line start is stripped
    4. lines with more than 30% non-CJK characters dropped
    5. remaining lines whitespace-trimmed and joined by newlines

    Raises :class:`PostprocessError` when nothing survives.
    """
    if not raw:
        raise PostprocessError("empty model output")
    bracketed = f"《{title}》"
    kept: list[str] = []
    for line in normalize_text(raw).split("\n"):
        if _CODE_FENCE.match(line):
            continue
        line = _MARKDOWN_CHARS.sub("", line)
        if bracketed in line:
            continue
        stripped = line.strip()
        for prefix in LABEL_PREFIXES:
            if stripped.startswith(prefix):
                stripped = stripped[len(prefix):].strip()
                break
        if not stripped:
            continue
        if _non_cjk_ratio(stripped) > MAX_NON_CJK_RATIO:
            continue
        kept.append(" ".join(stripped.split()))
    body = "\n".join(kept)
    if not body:
        raise PostprocessError("no poem content after cleanup rules")
    return body


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.9
    max_attempts: int = 5
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


ADAPTER_KINDS = ("stub", "replay", "http")


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    adapter: str = "stub"
    endpoint: str | None = None  # URL for http, directory for replay
    params: GenerationParams = field(default_factory=GenerationParams)

    def __post_init__(self) -> None:
        if self.adapter not in ADAPTER_KINDS:
            raise ValueError(f"unknown adapter kind: {self.adapter!r}")
        if self.adapter in ("http", "replay") and not self.endpoint:
            raise ValueError(f"{self.adapter} adapter requires an endpoint")


class Adapter(Protocol):
    def generate(self, prompt: str, *, title: str, attempt: int, nonce: str) -> str:
        ...


def title_hash(title: str) -> str:
    return hashlib.sha256(title.encode("utf-8")).hexdigest()[:16]


_STUB_ALPHABET = [chr(0x4E00 + i) for i in range(600)]


def _synthetic_body(rng: Random) -> str:
    """A deterministic pseudo-poem: mostly regular 5 or 7 character lines."""
    roll = rng.random()
    if roll < 0.45:
        lengths = [5] * rng.choice([4, 8])
    elif roll < 0.9:
        lengths = [7] * rng.choice([4, 8])
    else:
        lengths = [rng.choice([4, 5, 6, 7]) for _ in range(4)]
    lines = []
    for i, length in enumerate(lengths):
        chars = "".join(rng.choice(_STUB_ALPHABET) for _ in range(length))
        lines.append(chars + ("。" if i % 2 else "，"))
    return "".join(lines)


class StubAdapter:
    """Deterministic offline adapter.

    With no script it emits a synthetic pseudo-poem derived from
    (model_id, title, attempt, seed). A ``script(title, attempt) -> str``
    callable overrides that, which is how tests force plagiarism retries
    or broken outputs.
    """

    def __init__(
        self,
        model_id: str,
        seed: int = 0,
        script: Callable[[str, int], str] | None = None,
    ):
        self.model_id = model_id
        self.seed = seed
        self.script = script

    def generate(self, prompt: str, *, title: str, attempt: int, nonce: str) -> str:
        if self.script is not None:
            return self.script(title, attempt)
        rng = Random(derive_seed(self.seed, self.model_id, title, attempt))
        return _synthetic_body(rng)


class ReplayFileAdapter:
    """Replay pre-generated outputs from ``<root>/<model_id>/``.

    Attempt ``k`` reads ``<title-hash>.txt.<k>``; attempt 1 falls back to
    ``<title-hash>.txt``. The hash is the first 16 hex chars of the
    SHA-256 of the UTF-8 title.
    """

    def __init__(self, root: str | Path, model_id: str):
        self.root = Path(root)
        self.model_id = model_id

    def generate(self, prompt: str, *, title: str, attempt: int, nonce: str) -> str:
        base = self.root / self.model_id / f"{title_hash(title)}.txt"
        candidates = [base.with_name(base.name + f".{attempt}")]
        if attempt == 1:
            candidates.append(base)
        for path in candidates:
            if path.exists():
                return path.read_text(encoding="utf-8")
        raise AdapterError(
            f"replay file missing for model {self.model_id!r}, "
            f"title {title!r}, attempt {attempt} (looked for {candidates[0].name})"
        )


def api_key_env_var(model_id: str) -> str:
    normalized = re.sub(r"[^A-Za-z0-9]", "_", model_id).upper()
    return f"PROFTAP_KEY_{normalized}"


class HttpChatAdapter:
    """OpenAI-compatible chat-completion client.

    Sends ``{model, messages, temperature}`` plus any extra params; the
    API key comes from the ``PROFTAP_KEY_<MODEL_ID>`` environment variable.
    Transport failures and 5xx responses are retried with exponential
    backoff before raising.
    """

    def __init__(
        self,
        model_id: str,
        endpoint: str,
        params: GenerationParams,
        timeout: float = 60.0,
        transport_retries: int = 3,
        backoff: float = 0.5,
        client: httpx.Client | None = None,
    ):
        self.model_id = model_id
        self.endpoint = endpoint
        self.params = params
        self.timeout = timeout
        self.transport_retries = transport_retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)

    def generate(self, prompt: str, *, title: str, attempt: int, nonce: str) -> str:
        payload = {
            "model": self.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.params.temperature,
            **self.params.extra,
        }
        headers = {}
        key = os.environ.get(api_key_env_var(self.model_id))
        if key:
            headers["Authorization"] = f"Bearer {key}"
        last_error: Exception | None = None
        for retry in range(self.transport_retries):
            try:
                response = self._client.post(self.endpoint, json=payload, headers=headers)
                if response.status_code >= 500:
                    last_error = AdapterError(
                        f"{self.model_id}: server error {response.status_code}"
                    )
                elif response.status_code >= 400:
                    raise AdapterError(
                        f"{self.model_id}: request rejected "
                        f"({response.status_code}): {response.text[:200]}"
                    )
                else:
                    data = response.json()
                    return data["choices"][0]["message"]["content"]
            except httpx.TransportError as exc:
                last_error = exc
            time.sleep(self.backoff * 2**retry)
        raise AdapterError(
            f"{self.model_id}: transport failed after "
            f"{self.transport_retries} retries: {last_error}"
        )


def build_adapter(spec: ModelSpec, stub_seed: int = 0) -> Adapter:
    if spec.adapter == "stub":
        return StubAdapter(spec.model_id, seed=stub_seed)
    if spec.adapter == "replay":
        assert spec.endpoint is not None
        return ReplayFileAdapter(spec.endpoint, spec.model_id)
    assert spec.endpoint is not None
    return HttpChatAdapter(spec.model_id, spec.endpoint, spec.params)


@dataclass(frozen=True)
class GenerationResult:
    poem: Poem
    attempts: int


def generate_poem(
    spec: ModelSpec,
    template: PromptTemplate,
    title: str,
    index: LineIndex,
    adapter: Adapter | None = None,
    mode: MatchMode = MatchMode.SAME_POEM,
    poem_id: str | None = None,
    run_nonce: str = "",
) -> GenerationResult:
    """Generate one screened poem for (model, title).

    Each attempt gets a fresh nonce so resampling differs; a candidate is
    accepted only if post-processing yields a body and the duplicate check
    finds nothing. Raises :class:`GenerationExhaustedError` after
    ``max_attempts`` rejected candidates.
    """
    adapter = adapter or build_adapter(spec)
    prompt = render_prompt(template, title)
    reasons: list[str] = []
    for attempt in range(1, spec.params.max_attempts + 1):
        nonce = derive_token(run_nonce, spec.model_id, title, attempt)
        raw = adapter.generate(prompt, title=title, attempt=attempt, nonce=nonce)
        try:
            body = postprocess(raw, title)
        except PostprocessError as exc:
            reasons.append(f"attempt {attempt}: {exc}")
            continue
        poem = Poem(
            id=poem_id or f"{spec.model_id}:{title_hash(title)}",
            title=title,
            body=body,
            source=Source.model(spec.model_id),
        )
        evidence = find_duplication(poem, index, mode=mode)
        if evidence is None:
            return GenerationResult(poem=poem, attempts=attempt)
        reasons.append(
            f"attempt {attempt}: duplicates db poem {evidence.db_poem_id} "
            f"({evidence.length} lines)"
        )
    raise GenerationExhaustedError(spec.model_id, title, reasons)


@dataclass(frozen=True)
class PairFailure:
    model_id: str
    title: str
    error: str


@dataclass
class RunGenerationResult:
    poems: list[Poem]
    failures: list[PairFailure]
    attempts: dict[tuple[str, str], int]


def run_generation(
    models: Sequence[ModelSpec],
    titles: Sequence[str],
    template: PromptTemplate,
    index: LineIndex,
    mode: MatchMode = MatchMode.SAME_POEM,
    max_workers: int = 1,
    seed: int = 0,
    adapters: dict[str, Adapter] | None = None,
    id_fn: Callable[[str, int, str], str] | None = None,
) -> RunGenerationResult:
    """One poem per (model, title) pair; failures collected, never dropped.

    Pairs may run concurrently (``max_workers``); results are keyed by
    pair, so scheduling does not affect output order.
    """
    if not titles:
        raise ValueError("no titles to generate for")
    model_ids = [m.model_id for m in models]
    if len(set(model_ids)) != len(model_ids):
        raise ValueError("duplicate model ids")
    if id_fn is None:
        id_fn = lambda model_id, j, title: f"{model_id}:{j:04d}"

    def one(pair: tuple[ModelSpec, int, str]):
        spec, j, title = pair
        adapter = adapters.get(spec.model_id) if adapters else None
        if adapter is None:
            adapter = build_adapter(spec, stub_seed=seed)
        return generate_poem(
            spec,
            template,
            title,
            index,
            adapter=adapter,
            mode=mode,
            poem_id=id_fn(spec.model_id, j, title),
            run_nonce=str(seed),
        )

    jobs = [(spec, j, title) for spec in models for j, title in enumerate(titles)]
    outcomes: dict[tuple[str, str], GenerationResult | Exception] = {}
    if max_workers <= 1:
        for job in jobs:
            try:
                outcomes[(job[0].model_id, job[2])] = one(job)
            except Exception as exc:  # reported per pair below
                outcomes[(job[0].model_id, job[2])] = exc
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = {pool.submit(one, job): job for job in jobs}
            for future, job in futures.items():
                try:
                    outcomes[(job[0].model_id, job[2])] = future.result()
                except Exception as exc:
                    outcomes[(job[0].model_id, job[2])] = exc

    poems: list[Poem] = []
    failures: list[PairFailure] = []
    attempts: dict[tuple[str, str], int] = {}
    for spec in models:
        for title in titles:
            outcome = outcomes[(spec.model_id, title)]
            if isinstance(outcome, GenerationResult):
                poems.append(outcome.poem)
                attempts[(spec.model_id, title)] = outcome.attempts
            else:
                failures.append(PairFailure(spec.model_id, title, str(outcome)))
    return RunGenerationResult(poems=poems, failures=failures, attempts=attempts)
