"""Two-dimensional Sobol sequence with standard Joe-Kuo direction numbers."""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameter

_BITS = 32
_SCALE = 0.5 ** _BITS


def _direction_numbers() -> np.ndarray:
    """Direction integers v[dim, k] << (BITS - k - 1) for dims 1-2.

    Dimension 1 is the van der Corput sequence in base 2; dimension 2 uses
    the primitive polynomial x + 1 (s=1, a=0, m1=1) from the standard
    new-joe-kuo-6.21201 table.
    """
    v = np.zeros((2, _BITS), dtype=np.uint64)
    v[0] = 1 << np.arange(_BITS - 1, -1, -1, dtype=np.uint64)
    m = np.zeros(_BITS, dtype=np.uint64)
    m[0] = 1
    for k in range(1, _BITS):
        # recurrence for s=1: m_k = 2*m_{k-1} XOR m_{k-1}
        m[k] = (m[k - 1] << np.uint64(1)) ^ m[k - 1]
    v[1] = m << np.arange(_BITS - 1, -1, -1, dtype=np.uint64)
    return v


_V = _direction_numbers()


def sobol_2d(count: int, skip: int = 0) -> np.ndarray:
    """First ``count`` points of the 2D Sobol sequence in [0, 1)^2.

    The all-zeros point at index 0 is always skipped; ``skip`` discards that
    many further points first. Gray-code construction, deterministic.
    """
    if count < 1:
        raise InvalidParameter(f"count must be >= 1, got {count}")
    if skip < 0:
        raise InvalidParameter(f"skip must be >= 0, got {skip}")
    start = 1 + skip
    n = np.arange(start, start + count, dtype=np.uint64)
    gray = n ^ (n >> np.uint64(1))
    x = np.zeros((count, 2), dtype=np.uint64)
    for k in range(_BITS):
        bit = ((gray >> np.uint64(k)) & np.uint64(1)).astype(bool)
        for d in range(2):
            x[bit, d] ^= _V[d, k]
    return x.astype(np.float64) * _SCALE
