"""Span corruption: drop token spans, sentinel them, emit the reconstruction.

Each token is dropped independently (Bernoulli at `mask_rate`) and
consecutive dropped tokens merge into one span. Span k is replaced in the
inputs by sentinel k; the targets list sentinel k followed by the dropped
run, then a closing sentinel and eos. Randomness is a counter-based stream
keyed by (seed, stream_index), so re-masking the same tokens with a new
stream index ("sampled each epoch") is independent and reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .rng import philox
from .tokenizer import Vocab


@dataclass(frozen=True)
class CorruptionConfig:
    mask_rate: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.mask_rate < 1.0:
            raise ValueError(f"mask_rate must be in (0, 1), got {self.mask_rate}")


@dataclass
class CorruptedPair:
    inputs: list[int]
    targets: list[int]
    origin: str = ""

    def to_json(self) -> dict:
        return {"inputs": self.inputs, "targets": self.targets, "origin": self.origin}

    @classmethod
    def from_json(cls, obj: dict) -> "CorruptedPair":
        return cls(inputs=list(obj["inputs"]), targets=list(obj["targets"]), origin=obj.get("origin", ""))


class SentinelCapacityError(ValueError):
    pass


class MalformedPairError(ValueError):
    pass


def corrupt(
    tokens: list[int],
    vocab: Vocab,
    config: CorruptionConfig,
    stream_index: int,
    origin: str = "",
) -> CorruptedPair:
    """Corrupt one token sequence deterministically per (config.seed, stream_index).

    If the Bernoulli draws drop nothing, one uniformly chosen token is
    dropped so every example has a non-empty target.
    """
    if not tokens:
        raise ValueError("cannot corrupt an empty token sequence")
    for t in tokens:
        if t in (vocab.pad_id, vocab.eos_id) or vocab.is_sentinel(t) or not vocab.is_piece(t):
            raise ValueError(f"token id {t} is reserved or out of range")
    rng = philox(config.seed, "span-corruption", stream_index)
    n = len(tokens)
    dropped = rng.random(n) < config.mask_rate
    if not dropped.any():
        dropped[int(rng.integers(n))] = True

    inputs: list[int] = []
    targets: list[int] = []
    span = -1
    in_span = False
    for i, token in enumerate(tokens):
        if dropped[i]:
            if not in_span:
                span += 1
                if span + 1 >= vocab.sentinels:
                    raise SentinelCapacityError(
                        f"{span + 1} spans exceed sentinel capacity {vocab.sentinels - 1}"
                    )
                inputs.append(vocab.sentinel_id(span))
                targets.append(vocab.sentinel_id(span))
                in_span = True
            targets.append(token)
        else:
            inputs.append(token)
            in_span = False
    targets.append(vocab.sentinel_id(span + 1))
    targets.append(vocab.eos_id)
    return CorruptedPair(inputs=inputs, targets=targets, origin=origin)


def decorrupt(pair: CorruptedPair, vocab: Vocab) -> list[int]:
    """Splice the target spans back over their sentinels; the inverse of corrupt."""
    spans: dict[int, list[int]] = {}
    order: list[int] = []
    current: list[int] | None = None
    trailing: list[int] = []
    for t in pair.targets:
        if vocab.is_sentinel(t):
            k = vocab.size - 1 - t
            if order and k != order[-1] + 1:
                raise MalformedPairError(f"sentinel {k} out of order in targets")
            if not order and k != 0:
                raise MalformedPairError(f"targets must start with sentinel 0, got {k}")
            order.append(k)
            current = spans.setdefault(k, [])
        elif t == vocab.eos_id:
            current = None
        else:
            if current is None:
                trailing.append(t)
            else:
                current.append(t)
    if trailing:
        raise MalformedPairError("tokens after eos in targets")
    if not order:
        raise MalformedPairError("no sentinel spans in targets")
    closing = order[-1]
    if spans[closing]:
        raise MalformedPairError("closing sentinel must be empty")
    span_ids = order[:-1]
    if not span_ids:
        raise MalformedPairError("pair has no masked span")
    for k in span_ids:
        if not spans[k]:
            raise MalformedPairError(f"span {k} is empty in targets")

    out: list[int] = []
    seen: list[int] = []
    for t in pair.inputs:
        if vocab.is_sentinel(t):
            k = vocab.size - 1 - t
            if k != len(seen):
                raise MalformedPairError(f"input sentinel {k} out of order")
            seen.append(k)
            if k not in spans or k == closing:
                raise MalformedPairError(f"input sentinel {k} has no target span")
            out.extend(spans[k])
        else:
            out.append(t)
    if seen != span_ids:
        raise MalformedPairError(
            f"sentinel order mismatch: inputs {seen} vs targets {span_ids}"
        )
    return out


def write_pairs(pairs, path) -> None:
    """Write corrupted pairs as JSONL, one {"inputs","targets","origin"} per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_json(), ensure_ascii=True) + "\n")


def read_pairs(path) -> list[CorruptedPair]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(CorruptedPair.from_json(json.loads(line)))
    return out
