"""
Bit-string helpers

Configurations are uint8 arrays with site 0 as the most significant bit of
the basis index, so the string "10" (site 0 in |r>) has index 2.
"""

from typing import Iterable, List

import numpy as np


def place_values(n_sites: int) -> np.ndarray:
    """Powers of two for each site, site 0 first"""
    return (1 << np.arange(n_sites - 1, -1, -1)).astype(np.int64)


def all_configurations(n_sites: int) -> np.ndarray:
    """All 2^N configurations in basis order, shape (2^N, N)"""
    idx = np.arange(2**n_sites, dtype=np.int64)
    return index_to_bits(idx, n_sites)


def index_to_bits(index, n_sites: int) -> np.ndarray:
    """Basis index (scalar or array) to bit array(s)"""
    index = np.asarray(index, dtype=np.int64)
    shifts = np.arange(n_sites - 1, -1, -1)
    return ((index[..., None] >> shifts) & 1).astype(np.uint8)


def bits_to_index(bits) -> np.ndarray:
    """Bit array(s) of shape (..., N) to basis index"""
    bits = np.asarray(bits, dtype=np.int64)
    return bits @ place_values(bits.shape[-1])


def bits_to_string(bits) -> str:
    """Single configuration to its '0'/'1' string, site 0 leftmost"""
    return "".join("1" if b else "0" for b in np.asarray(bits).ravel())


def string_to_bits(text: str) -> np.ndarray:
    """Parse a '0'/'1' string; any other character raises ValueError"""
    text = text.strip()
    if not text or set(text) - {"0", "1"}:
        raise ValueError(f"Not a bit-string: {text!r}")
    return np.frombuffer(text.encode("ascii"), dtype=np.uint8) - ord("0")


def strings_to_bits(lines: Iterable[str]) -> np.ndarray:
    """Parse many equal-length bit-strings into an (n, N) array"""
    rows: List[np.ndarray] = [string_to_bits(line) for line in lines]
    if not rows:
        raise ValueError("No bit-strings given")
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError(f"Bit-strings have inconsistent lengths: {sorted(lengths)}")
    return np.stack(rows).astype(np.uint8)


def configuration(text: str) -> int:
    """Basis index of a bit-string such as 'rgrggrgr' or '10100101'"""
    text = text.strip().lower().replace("r", "1").replace("g", "0")
    return int(bits_to_index(string_to_bits(text)))
