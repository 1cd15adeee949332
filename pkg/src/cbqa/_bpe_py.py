"""Pure-Python greedy longest-match encoder.

Fallback for the Cython kernel in `_bpe_cy`; same contract, chosen at import
time by `cbqa.tokenizer`. Scans left to right, taking the longest vocabulary
piece that matches at the current position. The 256 single-byte pieces
guarantee progress on any input.
"""

from __future__ import annotations

BACKEND = "python"


def encode_bytes(data: bytes, piece_to_id: dict[bytes, int], max_piece_len: int) -> list[int]:
    out: list[int] = []
    i = 0
    n = len(data)
    while i < n:
        limit = min(max_piece_len, n - i)
        for length in range(limit, 0, -1):
            piece_id = piece_to_id.get(data[i : i + length])
            if piece_id is not None:
                out.append(piece_id)
                i += length
                break
        else:
            raise ValueError(f"no piece matches byte 0x{data[i]:02x} at offset {i}")
    return out
