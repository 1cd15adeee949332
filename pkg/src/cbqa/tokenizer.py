"""Byte-level BPE vocabulary with reserved sentinel ids.

Id layout: pad=0, eos=1, then the byte/merge pieces, with the top
`sentinels` ids reserved for span-masking sentinels (sentinel k maps to id
size-1-k, so sentinel ids are strictly decreasing in k). Every single byte
value is a piece, so any byte string encodes, and decoding returns the exact
source bytes.

Encoding is greedy longest-match, served by the compiled trie kernel when
the extension built, with a pure-Python fallback selected at import. Set
CBQA_PURE_PY=1 to force the fallback.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import _bpe_py

_ext = None
if not os.environ.get("CBQA_PURE_PY"):
    try:
        from . import _bpe_cy as _ext
    except ImportError:
        _ext = None


def encode_backend() -> str:
    """Name of the encoder implementation in use ("cython" or "python")."""
    return _ext.BACKEND if _ext is not None else _bpe_py.BACKEND


PAD_ID = 0
EOS_ID = 1
_PIECE_OFFSET = 2
_NUM_BYTES = 256

VOCAB_MAGIC = "CBQA-VOCAB v1"


class VocabError(ValueError):
    pass


def _build_trie(pieces: list[bytes], offset: int) -> tuple[np.ndarray, np.ndarray]:
    # Upper bound on nodes: one per byte of every piece, plus the root.
    cap = 1 + sum(len(p) for p in pieces)
    children = np.full((cap, 256), -1, dtype=np.int32)
    piece_id = np.full(cap, -1, dtype=np.int32)
    n_nodes = 1
    for idx, piece in enumerate(pieces):
        node = 0
        for b in piece:
            nxt = children[node, b]
            if nxt < 0:
                nxt = n_nodes
                children[node, b] = nxt
                n_nodes += 1
            node = nxt
        piece_id[node] = offset + idx
    return np.ascontiguousarray(children[:n_nodes]), piece_id[:n_nodes]


@dataclass
class Vocab:
    pieces: list[bytes]
    sentinels: int = 100

    def __post_init__(self):
        if len(set(self.pieces)) != len(self.pieces):
            raise VocabError("pieces must be unique")
        for b in range(_NUM_BYTES):
            if bytes([b]) not in self._piece_to_id_map():
                raise VocabError(f"missing single-byte piece 0x{b:02x}")

    # -- id space ---------------------------------------------------------

    @property
    def size(self) -> int:
        return _PIECE_OFFSET + len(self.pieces) + self.sentinels

    @property
    def pad_id(self) -> int:
        return PAD_ID

    @property
    def eos_id(self) -> int:
        return EOS_ID

    def sentinel_id(self, k: int) -> int:
        if not 0 <= k < self.sentinels:
            raise VocabError(f"sentinel index {k} out of range [0, {self.sentinels})")
        return self.size - 1 - k

    def is_sentinel(self, token_id: int) -> bool:
        return self.size - self.sentinels <= token_id < self.size

    def is_piece(self, token_id: int) -> bool:
        return _PIECE_OFFSET <= token_id < _PIECE_OFFSET + len(self.pieces)

    # -- encode / decode --------------------------------------------------

    def _piece_to_id_map(self) -> dict[bytes, int]:
        cached = getattr(self, "_piece_to_id", None)
        if cached is None:
            cached = {p: _PIECE_OFFSET + i for i, p in enumerate(self.pieces)}
            object.__setattr__(self, "_piece_to_id", cached)
        return cached

    def _trie(self) -> tuple[np.ndarray, np.ndarray]:
        cached = getattr(self, "_trie_arrays", None)
        if cached is None:
            cached = _build_trie(self.pieces, _PIECE_OFFSET)
            object.__setattr__(self, "_trie_arrays", cached)
        return cached

    def encode_bytes(self, data: bytes) -> list[int]:
        if not data:
            return []
        if _ext is not None:
            children, piece_id = self._trie()
            return _ext.encode_bytes(data, children, piece_id)
        table = self._piece_to_id_map()
        max_len = max(len(p) for p in self.pieces)
        return _bpe_py.encode_bytes(data, table, max_len)

    def encode(self, text: str) -> list[int]:
        return self.encode_bytes(text.encode("utf-8"))

    def decode_bytes(self, token_ids: Iterable[int]) -> bytes:
        parts = []
        for tid in token_ids:
            if not self.is_piece(tid):
                raise VocabError(f"id {tid} is not decodable (special, sentinel, or out of range)")
            parts.append(self.pieces[tid - _PIECE_OFFSET])
        return b"".join(parts)

    def decode(self, token_ids: Iterable[int]) -> str:
        return self.decode_bytes(token_ids).decode("utf-8")

    def render(self, token_ids: Iterable[int]) -> str:
        """Lossy display form: pieces decoded, specials shown as markers."""
        parts = []
        for tid in token_ids:
            if tid == PAD_ID:
                parts.append(b"<pad>")
            elif tid == EOS_ID:
                parts.append(b"<eos>")
            elif self.is_sentinel(tid):
                parts.append(f"<s{self.size - 1 - tid}>".encode())
            elif self.is_piece(tid):
                parts.append(self.pieces[tid - _PIECE_OFFSET])
            else:
                parts.append(f"<bad:{tid}>".encode())
        return b"".join(parts).decode("utf-8", errors="replace")

    # -- persistence ------------------------------------------------------

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(f"{VOCAB_MAGIC}\n")
            fh.write(f"sentinels={self.sentinels}\n")
            for piece in self.pieces:
                fh.write(_escape(piece) + "\n")

    @classmethod
    def load(cls, path) -> "Vocab":
        with open(path, "r", encoding="ascii") as fh:
            magic = fh.readline().rstrip("\n")
            if magic != VOCAB_MAGIC:
                raise VocabError(f"bad vocab header {magic!r}")
            header = fh.readline().rstrip("\n")
            if not header.startswith("sentinels="):
                raise VocabError(f"bad sentinel header {header!r}")
            sentinels = int(header.split("=", 1)[1])
            pieces = [_unescape(line.rstrip("\n")) for line in fh]
        return cls(pieces=pieces, sentinels=sentinels)


def _escape(piece: bytes) -> str:
    out = []
    for b in piece:
        if 0x21 <= b <= 0x7E and b != 0x5C:  # printable ASCII minus backslash
            out.append(chr(b))
        else:
            out.append(f"\\x{b:02x}")
    return "".join(out)


def _unescape(line: str) -> bytes:
    out = bytearray()
    i = 0
    while i < len(line):
        if line[i] == "\\":
            if line[i + 1] != "x":
                raise VocabError(f"bad escape in vocab line {line!r}")
            out.append(int(line[i + 2 : i + 4], 16))
            i += 4
        else:
            out.append(ord(line[i]))
            i += 1
    return bytes(out)


def build_vocab(corpus: Iterable[str], size: int, sentinels: int = 100) -> Vocab:
    """Learn a byte-level BPE vocabulary of at most `size` total ids.

    Greedy merges by descending pair frequency, ties broken by the
    lexicographically smallest (left, right) byte pair. Deterministic for a
    given corpus and size. Stops early if the corpus runs out of adjacent
    pairs, in which case the vocabulary is smaller than requested.
    """
    reserved = _PIECE_OFFSET + sentinels
    min_size = reserved + _NUM_BYTES
    if size < min_size:
        raise VocabError(
            f"size {size} too small: need at least {min_size} "
            f"({_NUM_BYTES} bytes + {reserved} special/sentinel ids)"
        )
    n_merges = size - min_size
    sequences: list[list[bytes]] = [
        [bytes([b]) for b in text.encode("utf-8")] for text in corpus
    ]
    piece_set = {bytes([b]) for b in range(_NUM_BYTES)}
    merged: list[bytes] = []
    while len(merged) < n_merges:
        counts: Counter[tuple[bytes, bytes]] = Counter()
        for seq in sequences:
            for left, right in zip(seq, seq[1:]):
                counts[(left, right)] += 1
        if not counts:
            break
        top = max(counts.values())
        left, right = min(pair for pair, c in counts.items() if c == top)
        new_piece = left + right
        for s, seq in enumerate(sequences):
            out: list[bytes] = []
            i = 0
            while i < len(seq):
                if i + 1 < len(seq) and seq[i] == left and seq[i + 1] == right:
                    out.append(new_piece)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            sequences[s] = out
        if new_piece not in piece_set:
            piece_set.add(new_piece)
            merged.append(new_piece)
    pieces = [bytes([b]) for b in range(_NUM_BYTES)] + merged
    return Vocab(pieces=pieces, sentinels=sentinels)
