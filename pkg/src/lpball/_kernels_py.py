"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Row sums use numpy's pairwise summation instead of Neumaier compensation;
for the row lengths used here (n <= 2**20) both keep the relative error
near machine precision.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erfc


def _powe(m: np.ndarray, e: float) -> np.ndarray:
    if e == 1.0:
        return m
    if e == 2.0:
        return m * m
    if e == 0.5:
        return np.sqrt(m)
    return np.power(m, e)


def power_sums(g: np.ndarray, p: float, q: float) -> np.ndarray:
    g = np.ascontiguousarray(g, dtype=np.float64)
    m = p * g
    out = np.empty((3, g.shape[0]))
    out[0] = m.sum(axis=1)
    out[1] = _powe(m, 2.0 / p).sum(axis=1)
    out[2] = _powe(m, q / p).sum(axis=1) if q > 0.0 else np.nan
    return out


def ks_sorted_gaussian(x: np.ndarray, sigma: float) -> float:
    m = x.shape[0]
    cdf = 0.5 * erfc(-x * (np.sqrt(0.5) / sigma))
    i = np.arange(m, dtype=np.float64)
    up = (i + 1.0) / m - cdf
    lo = cdf - i / m
    return float(max(0.0, up.max(), lo.max()))


def ks_two_sorted(a: np.ndarray, b: np.ndarray) -> float:
    t = np.concatenate([a, b])
    fa = np.searchsorted(a, t, side="right") / a.shape[0]
    fb = np.searchsorted(b, t, side="right") / b.shape[0]
    return float(np.abs(fa - fb).max())
