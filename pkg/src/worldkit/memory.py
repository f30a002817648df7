"""Session-scoped multimodal memory with scored retrieval and lifecycle management.

Records carry a 32-dim unit-or-zero feature vector. Selection scores
similarity against recency; compression greedily merges near-duplicate
records; lifecycle management evicts the lowest-retention records once
a session exceeds capacity. Every mutation appends to a per-session
event log whose replay reconstructs the store byte-exactly.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Modality, canonical_json, decode_frame, digest64, fnv1a64


class MemoryStoreError(ValueError):
    """Unknown session, foreign ids, or capacity deadlock."""


FEATURE_DIM = 32


def featurize(modality: Modality, payload: bytes) -> np.ndarray:
    """32-dim unit-or-zero feature vector for a payload.

    Frames: pixels scaled to [0, 1], flattened row-major, truncated or
    zero-padded to 32 dims, then L2-normalized. Text: character-trigram
    counts hashed into 32 buckets (64-bit FNV-1a mod 32), L2-normalized.
    Other modalities featurize to the zero vector.
    """
    vec = np.zeros(FEATURE_DIM, dtype=np.float64)
    if modality in (Modality.IMAGE, Modality.VIDEO_FRAMES):
        frame = decode_frame(payload)
        scaled = np.frombuffer(frame.pixels, dtype=np.uint8).astype(np.float64) / 255.0
        n = min(scaled.size, FEATURE_DIM)
        vec[:n] = scaled[:n]
    elif modality == Modality.TEXT:
        text = payload.decode("utf-8")
        for i in range(len(text) - 2):
            bucket = fnv1a64(text[i:i + 3].encode("utf-8")) % FEATURE_DIM
            vec[bucket] += 1.0
    else:
        return vec
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0.0 else vec


@dataclass(frozen=True)
class MemoryConfig:
    capacity: int = 256
    similarity_weight: float = 0.7   # weight on cosine similarity in selection
    recency_decay: float = 0.05      # exponential decay rate on record age
    merge_threshold: float = 0.98    # cosine at or above which records merge

    def __post_init__(self):
        if self.capacity < 1:
            raise MemoryStoreError(f"capacity must be >= 1, got {self.capacity}")
        if not 0.0 <= self.similarity_weight <= 1.0:
            raise MemoryStoreError(f"similarity_weight must be in [0, 1], got {self.similarity_weight}")
        if self.recency_decay <= 0.0:
            raise MemoryStoreError(f"recency_decay must be positive, got {self.recency_decay}")
        if not 0.0 < self.merge_threshold <= 1.0:
            raise MemoryStoreError(f"merge_threshold must be in (0, 1], got {self.merge_threshold}")


@dataclass
class MemoryRecord:
    id: str
    session: str
    step: int
    modality: Modality
    feature: np.ndarray
    payload_digest: str
    metadata: dict[str, str]
    weight: float = 1.0
    pinned: bool = False


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    # Features are unit or zero vectors, so the dot product is the cosine
    # (and zero-vector cosine is defined as 0).
    return float(a @ b)


@dataclass
class _Session:
    records: dict[str, MemoryRecord] = field(default_factory=dict)
    step_counter: int = 0
    id_counter: int = 0
    log: list[str] = field(default_factory=list)


class MemoryStore:
    """Namespaced store; one exclusive writer per session."""

    def __init__(self, config: MemoryConfig | None = None):
        self.config = config or MemoryConfig()
        self._sessions: dict[str, _Session] = {}

    def create_session(self, session: str) -> None:
        if session in self._sessions:
            raise MemoryStoreError(f"session already exists: {session!r}")
        self._sessions[session] = _Session()
        self._log(session, {"op": "create", "session": session})

    def sessions(self) -> list[str]:
        return sorted(self._sessions)

    def _session(self, session: str) -> _Session:
        try:
            return self._sessions[session]
        except KeyError:
            raise MemoryStoreError(f"unknown session: {session!r}") from None

    def _log(self, session: str, event: dict) -> None:
        self._sessions[session].log.append(canonical_json(event).decode("ascii"))

    def record(self, session: str, modality: Modality, payload: bytes,
               metadata: dict[str, str] | None = None) -> str:
        """Append one record; step numbers are never reused."""
        ns = self._session(session)
        metadata = dict(metadata or {})
        record_id = f"{session}:{ns.id_counter:08d}"
        ns.id_counter += 1
        ns.records[record_id] = MemoryRecord(
            id=record_id,
            session=session,
            step=ns.step_counter,
            modality=modality,
            feature=featurize(modality, payload),
            payload_digest=digest64(payload),
            metadata=metadata,
        )
        ns.step_counter += 1
        self._log(session, {
            "op": "record",
            "modality": modality.value,
            "payload_b64": base64.b64encode(payload).decode("ascii"),
            "metadata": metadata,
        })
        return record_id

    def step_counter(self, session: str) -> int:
        """Next step number the session will assign."""
        return self._session(session).step_counter

    def records(self, session: str) -> list[MemoryRecord]:
        ns = self._session(session)
        return sorted(ns.records.values(), key=lambda r: (r.step, r.id))

    def get(self, session: str, record_id: str) -> MemoryRecord:
        ns = self._session(session)
        if record_id not in ns.records:
            raise MemoryStoreError(f"unknown record: {record_id!r}")
        return ns.records[record_id]

    def pin(self, session: str, record_id: str) -> None:
        self.get(session, record_id).pinned = True
        self._log(session, {"op": "pin", "id": record_id})

    def score(self, record: MemoryRecord, query_feature: np.ndarray, now_step: int) -> float:
        w = self.config.similarity_weight
        similarity = _cosine(query_feature, record.feature)
        recency = math.exp(-self.config.recency_decay * (now_step - record.step))
        return w * similarity + (1.0 - w) * recency

    def select(self, session: str, query_feature: np.ndarray, now_step: int,
               k: int) -> list[MemoryRecord]:
        """Top-k by similarity/recency score; ties prefer newer, then smaller id."""
        if k < 1:
            raise MemoryStoreError(f"k must be >= 1, got {k}")
        ns = self._session(session)
        ranked = sorted(
            ns.records.values(),
            key=lambda r: (-self.score(r, query_feature, now_step), -r.step, r.id),
        )
        return ranked[:k]

    def compress(self, session: str, ids: list[str] | None = None) -> list[str]:
        """Greedy in step order: merge a record into the first earlier survivor
        of the same modality with cosine >= merge_threshold. Survivors keep
        their step and feature; weight accumulates; on metadata key clashes
        the earlier record wins. Returns surviving ids."""
        ns = self._session(session)
        if ids is None:
            ids = [r.id for r in self.records(session)]
        ids = list(dict.fromkeys(ids))
        for record_id in ids:
            if record_id not in ns.records:
                raise MemoryStoreError(f"record not in session {session!r}: {record_id!r}")
        subset = sorted((ns.records[i] for i in ids), key=lambda r: (r.step, r.id))
        survivors: list[MemoryRecord] = []
        for record in subset:
            merged = False
            for survivor in survivors:
                if (survivor.modality == record.modality
                        and _cosine(survivor.feature, record.feature) >= self.config.merge_threshold):
                    survivor.weight += record.weight
                    survivor.metadata = {**record.metadata, **survivor.metadata}
                    survivor.pinned = survivor.pinned or record.pinned
                    del ns.records[record.id]
                    merged = True
                    break
            if not merged:
                survivors.append(record)
        self._log(session, {"op": "compress", "ids": list(ids)})
        return [s.id for s in survivors]

    def manage(self, session: str, now_step: int | None = None) -> list[str]:
        """Evict lowest-retention unpinned records until within capacity.

        Retention is weight * exp(-recency_decay * age); ties evict the
        oldest record first. Errors if only pinned records remain above
        capacity.
        """
        ns = self._session(session)
        if now_step is None:
            now_step = ns.step_counter
        evicted: list[str] = []
        while len(ns.records) > self.config.capacity:
            candidates = [r for r in ns.records.values() if not r.pinned]
            if not candidates:
                raise MemoryStoreError(
                    f"session {session!r} over capacity with only pinned records"
                )
            victim = min(
                candidates,
                key=lambda r: (
                    r.weight * math.exp(-self.config.recency_decay * (now_step - r.step)),
                    r.step,
                    r.id,
                ),
            )
            del ns.records[victim.id]
            evicted.append(victim.id)
        self._log(session, {"op": "manage", "now_step": now_step})
        return evicted

    def serialize_session(self, session: str) -> bytes:
        """Canonical byte form of one session's full state."""
        ns = self._session(session)
        return canonical_json({
            "session": session,
            "step_counter": ns.step_counter,
            "id_counter": ns.id_counter,
            "records": [
                {
                    "id": r.id,
                    "step": r.step,
                    "modality": r.modality.value,
                    "feature": list(r.feature),
                    "payload_digest": r.payload_digest,
                    "metadata": r.metadata,
                    "weight": r.weight,
                    "pinned": r.pinned,
                }
                for r in self.records(session)
            ],
        })

    def export_log(self, session: str) -> str:
        """Append-only event log, one JSON event per line."""
        return "\n".join(self._session(session).log) + "\n"

    @classmethod
    def replay_log(cls, log_text: str, config: MemoryConfig | None = None) -> "MemoryStore":
        """Rebuild a store by re-executing a session event log."""
        store = cls(config)
        for line in log_text.strip("\n").split("\n"):
            event = json.loads(line)
            op = event["op"]
            if op == "create":
                store.create_session(event["session"])
                session = event["session"]
            elif op == "record":
                store.record(session, Modality.from_tag(event["modality"]),
                             base64.b64decode(event["payload_b64"]), event["metadata"])
            elif op == "pin":
                store.pin(session, event["id"])
            elif op == "compress":
                store.compress(session, event["ids"])
            elif op == "manage":
                store.manage(session, event["now_step"])
            else:
                raise MemoryStoreError(f"unknown log event: {op!r}")
        return store
