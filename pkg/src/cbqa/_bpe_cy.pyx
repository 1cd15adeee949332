# cython: boundscheck=False, wraparound=False, language_level=3
"""Trie-based greedy longest-match encoder, the hot path of tokenization.

The trie is built once per vocabulary by `cbqa.tokenizer` and passed in as
two flat arrays: `children[node, byte]` (-1 for no edge) and
`piece_id[node]` (-1 for non-terminal nodes). Must emit exactly the same ids
as `cbqa._bpe_py.encode_bytes`.
"""

BACKEND = "cython"


def encode_bytes(const unsigned char[::1] data,
                 const int[:, ::1] children,
                 const int[::1] piece_id):
    cdef Py_ssize_t i = 0, j, n = data.shape[0]
    cdef int node, best_id, best_len
    out = []
    while i < n:
        node = 0
        best_id = -1
        best_len = 0
        j = i
        while j < n:
            node = children[node, data[j]]
            if node < 0:
                break
            j += 1
            if piece_id[node] >= 0:
                best_id = piece_id[node]
                best_len = <int> (j - i)
        if best_id < 0:
            raise ValueError(f"no piece matches byte 0x{data[i]:02x} at offset {i}")
        out.append(best_id)
        i += best_len
    return out
