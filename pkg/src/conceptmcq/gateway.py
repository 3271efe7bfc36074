"""Provider-agnostic chat completion gateway with record/replay transcripts.

Every call is a (system, user, temperature, tag) quadruple hashed into a
request digest. In RECORD mode completions are appended to a JSONL
transcript; in REPLAY mode they are served back in order, with the digest
of each incoming request checked against the recorded one so replays fail
loudly on any drift in prompts, ordering, or temperature. LIVE mode talks
to an OpenAI-style /chat/completions endpoint over HTTP with bounded
retries and exponential backoff.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .config import Settings

import httpx


class Tag(str, Enum):
    """What a request is for; recorded alongside the prompt digest."""

    MATCH = "match"
    GENERATE = "generate"
    JUDGE_UNIQUE = "judge_unique"
    JUDGE_CORRECT = "judge_correct"
    FIX = "fix"


@dataclass(frozen=True)
class CompletionRequest:
    system: str
    user: str
    temperature: float
    tag: Tag

    def digest(self) -> str:
        canon = json.dumps(
            {
                "system": self.system,
                "user": self.user,
                "temperature": self.temperature,
                "tag": self.tag.value,
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class GatewayError(Exception):
    """Base for all gateway failures."""


class TransportFailure(GatewayError):
    """The provider could not be reached or answered abnormally."""


class GatewayTimeout(TransportFailure):
    pass


class ProviderError(TransportFailure):
    """Non-2xx response or malformed completion payload."""


class RetriesExhausted(TransportFailure):
    """All retry attempts failed; carries the last underlying error."""

    def __init__(self, attempts: int, last: Exception):
        self.attempts = attempts
        self.last = last
        super().__init__(f"gave up after {attempts} attempt(s): {last}")


class ReplayError(GatewayError):
    """Replay divergence; never swallowed or retried."""


class DigestMismatch(ReplayError):
    """Incoming request differs from what the transcript recorded."""

    def __init__(self, position: int, expected_tag: str, got: CompletionRequest):
        self.position = position
        self.expected_tag = expected_tag
        self.got = got
        super().__init__(
            f"replay diverged at entry {position}: transcript recorded a"
            f" {expected_tag!r} request with a different digest than the"
            f" incoming {got.tag.value!r} request"
        )


class TranscriptExhausted(ReplayError):
    def __init__(self, position: int):
        self.position = position
        super().__init__(f"transcript exhausted: no entry at position {position}")


class Mode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


TRANSCRIPT_FORMAT = "transcript"
TRANSCRIPT_VERSION = 1

Transport = Callable[[CompletionRequest], str]


def http_transport(settings: Settings) -> Transport:
    """OpenAI-style chat completion call over HTTP."""

    def call(request: CompletionRequest) -> str:
        headers = {"Content-Type": "application/json"}
        if settings.api_key:
            headers["Authorization"] = f"Bearer {settings.api_key}"
        body = {
            "model": settings.model,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        }
        try:
            resp = httpx.post(
                settings.base_url.rstrip("/") + "/chat/completions",
                json=body,
                headers=headers,
                timeout=settings.timeout_s,
            )
        except httpx.TimeoutException as exc:
            raise GatewayTimeout(f"provider timed out after {settings.timeout_s}s") from exc
        except httpx.HTTPError as exc:
            raise TransportFailure(f"transport error: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderError(f"provider returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion payload: {exc}") from exc

    return call


@dataclass
class TranscriptEntry:
    digest: str
    tag: str
    completion: str


class Gateway:
    """Chat gateway with retries, temperature policy, and transcripts.

    ``transport`` is injectable so tests can script completions without a
    network; retries wrap the transport uniformly. ``sleep`` is injectable
    for the same reason. ``retry_count`` tallies re-sends across the life
    of the gateway.
    """

    def __init__(
        self,
        settings: Settings,
        mode: Mode = Mode.LIVE,
        transcript_path: "str | Path | None" = None,
        transport: "Transport | None" = None,
        sleep: Callable[[float], None] = time.sleep,
        meta: "dict | None" = None,
    ):
        self.settings = settings
        self.mode = mode
        self.retry_count = 0
        self.calls_made = 0
        self._sleep = sleep
        self._transport = transport or http_transport(settings)
        self._transcript_path = Path(transcript_path) if transcript_path else None
        self._replay_entries: list[TranscriptEntry] = []
        self._replay_pos = 0
        self._consumed_digests: list[str] = []
        self.transcript_meta: dict = dict(meta or {})
        if mode in (Mode.RECORD, Mode.REPLAY) and self._transcript_path is None:
            raise ValueError(f"{mode.value} mode requires a transcript path")
        if mode == Mode.REPLAY:
            self._load_transcript()
        if mode == Mode.RECORD:
            self._write_header()

    # -- transcript plumbing -------------------------------------------------

    def _write_header(self) -> None:
        header = {
            "format": TRANSCRIPT_FORMAT,
            "version": TRANSCRIPT_VERSION,
            "meta": self.transcript_meta,
        }
        self._transcript_path.parent.mkdir(parents=True, exist_ok=True)
        with self._transcript_path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps(header, ensure_ascii=False) + "\n")

    def _load_transcript(self) -> None:
        try:
            lines = self._transcript_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ReplayError(f"cannot read transcript {self._transcript_path}: {exc}") from exc
        if not lines:
            raise ReplayError(f"transcript {self._transcript_path} is empty")
        try:
            header = json.loads(lines[0])
        except ValueError as exc:
            raise ReplayError(f"transcript header is not valid JSON: {exc}") from exc
        if header.get("format") != TRANSCRIPT_FORMAT or header.get("version") != TRANSCRIPT_VERSION:
            raise ReplayError(
                f"unsupported transcript header: {header.get('format')!r}"
                f" v{header.get('version')!r}"
            )
        self.transcript_meta = header.get("meta", {})
        for n, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                self._replay_entries.append(
                    TranscriptEntry(
                        digest=row["digest"], tag=row["tag"], completion=row["completion"]
                    )
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise ReplayError(f"transcript line {n} is unreadable: {exc}") from exc

    def _append_entry(self, entry: TranscriptEntry) -> None:
        with self._transcript_path.open("a", encoding="utf-8") as fh:
            fh.write(
                json.dumps(
                    {"digest": entry.digest, "tag": entry.tag, "completion": entry.completion},
                    ensure_ascii=False,
                )
                + "\n"
            )

    def run_digest(self) -> str:
        """Digest over all request digests consumed so far, in order."""
        h = hashlib.sha256()
        for d in self._consumed_digests:
            h.update(d.encode("ascii"))
        return h.hexdigest()

    @property
    def replay_remaining(self) -> int:
        return len(self._replay_entries) - self._replay_pos

    # -- completion ----------------------------------------------------------

    def complete(self, request: CompletionRequest) -> str:
        if not self.settings.allow_any_temperature:
            if request.temperature not in self.settings.allowed_temperatures():
                raise ValueError(
                    f"temperature {request.temperature} is outside the configured"
                    f" profiles {sorted(self.settings.allowed_temperatures())}"
                )
        digest = request.digest()
        self.calls_made += 1

        if self.mode == Mode.REPLAY:
            if self._replay_pos >= len(self._replay_entries):
                raise TranscriptExhausted(self._replay_pos)
            entry = self._replay_entries[self._replay_pos]
            if entry.digest != digest:
                raise DigestMismatch(self._replay_pos, entry.tag, request)
            self._replay_pos += 1
            self._consumed_digests.append(digest)
            return entry.completion

        completion = self._call_with_retries(request)
        self._consumed_digests.append(digest)
        if self.mode == Mode.RECORD:
            self._append_entry(
                TranscriptEntry(digest=digest, tag=request.tag.value, completion=completion)
            )
        return completion

    def _call_with_retries(self, request: CompletionRequest) -> str:
        attempts = self.settings.max_retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            if attempt:
                self.retry_count += 1
                self._sleep(self.settings.backoff_s * (2 ** (attempt - 1)))
            try:
                return self._transport(request)
            except TransportFailure as exc:
                last = exc
        raise RetriesExhausted(attempts, last)
