"""Exact samplers for p-Gaussians, ball points, projections and the statistics Y_n.

A point of the ball law is ``Z / (||Z||_p^p + W)^(1/p)`` with i.i.d.
p-Gaussian coordinates ``Z``.  The projection norm onto a Haar random
subspace is sampled through its distributional identity, which needs only
power sums of ``Z`` plus chi-square sums of auxiliary Gaussians; the direct
route through an explicit Haar frame is kept as an oracle.

Magnitudes are drawn as ``|Z| = (p G)^(1/p)`` with ``G ~ Gamma(1/p)``, so
``|Z|^p = p G`` exactly and the statistics never need the signs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import kernels
from .analytic import moment_Mp, validate_p
from .errors import ConfigError, NumericalError
from .models import ModelSpec, WSpec
from .rng import RngStream, as_generator

# Upper bound on doubles held by one gamma draw buffer.
_CHUNK_ELEMS = 1 << 22
DIRECT_MAX_N = 4096
DEFAULT_BLOCK = 1024


# --- elementary draws -------------------------------------------------------


def sample_p_gaussian(
    p: float, count: int, rng: RngStream | np.random.Generator, experimental: bool = False
) -> np.ndarray:
    """I.i.d. draws with density ``exp(-|s|^p / p) / (2 p^(1/p) Gamma(1 + 1/p))``."""
    p = validate_p(p, experimental)
    if count < 0:
        raise ValueError(f"count must be >= 0, got {count}")
    gen = as_generator(rng)
    mag = np.power(p * gen.standard_gamma(1.0 / p, count), 1.0 / p)
    sign = gen.integers(0, 2, count, dtype=np.int8) * 2 - 1
    return mag * sign


def sample_w(spec: WSpec, count: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    return spec.sample(count, as_generator(rng))


def _chi2(dof: np.ndarray | float, size: int, gen: np.random.Generator) -> np.ndarray:
    # sum of `dof` squared standard normals; dof == 0 gives 0
    return 2.0 * gen.standard_gamma(np.broadcast_to(np.asarray(dof, dtype=float) / 2.0, (size,)))


def _gamma_power_sums(p: float, q: float, n: int, size: int, gen: np.random.Generator) -> np.ndarray:
    """Per-replicate sums of ``|Z|^p``, ``Z^2``, ``|Z|^q`` over ``n`` coordinates."""
    out = np.empty((3, size))
    rows = max(1, _CHUNK_ELEMS // n)
    shape = 1.0 / p
    qq = q if q is not None else 0.0
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        g = gen.standard_gamma(shape, (stop - start, n))
        out[:, start:stop] = kernels.power_sums(g, p, qq)
    return out


# --- ball points ------------------------------------------------------------


def sample_ball_points(spec: ModelSpec, count: int, rng: RngStream | np.random.Generator) -> np.ndarray:
    """``count`` points of the ball law, shape ``(count, n)``."""
    gen = as_generator(rng)
    p, n = spec.p, spec.n
    g = gen.standard_gamma(1.0 / p, (count, n))
    sign = gen.integers(0, 2, (count, n), dtype=np.int8) * 2 - 1
    w = spec.w.sample(count, gen)
    radial = kernels.power_sums(g, p, 0.0)[0] + w
    if np.any(radial <= 0.0):
        raise NumericalError("||Z||_p^p + W vanished")
    z = np.power(p * g, 1.0 / p) * sign
    return z / np.power(radial, 1.0 / p)[:, None]


def sample_ball_point(spec: ModelSpec, rng: RngStream | np.random.Generator) -> np.ndarray:
    """One point ``Z / (||Z||_p^p + W)^(1/p)``; lies on the sphere iff ``W == 0``."""
    return sample_ball_points(spec, 1, rng)[0]


# --- projection norms -------------------------------------------------------


@dataclass
class _Sums:
    """Raw sums shared by every statistic of one block of replicates."""

    s_p: np.ndarray  # sum |Z_i|^p
    s_2: np.ndarray  # sum Z_i^2
    s_q: np.ndarray  # sum |Z_i|^q (NaN unless q_norm)
    w: np.ndarray
    chi_in: np.ndarray | None = None  # sum of g_i^2 over the projected coordinates
    chi_out: np.ndarray | None = None  # sum of g_i^2 over the rest
    dim: np.ndarray | None = None  # number of projected coordinates


def _draw_sums(spec: ModelSpec, size: int, gen: np.random.Generator) -> _Sums:
    p, n = spec.p, spec.n
    ps = _gamma_power_sums(p, spec.q if spec.mode == "q_norm" else 0.0, n, size, gen)
    sums = _Sums(s_p=ps[0], s_2=ps[1], s_q=ps[2], w=spec.w.sample(size, gen))
    if spec.mode == "grassmann_fixed":
        sums.dim = np.full(size, spec.k, dtype=np.int64)
    elif spec.mode == "grassmann_random":
        sums.dim = gen.binomial(n, spec.lam, size)
    else:
        return sums
    sums.chi_in = _chi2(sums.dim, size, gen)
    sums.chi_out = _chi2(n - sums.dim, size, gen)
    return sums


def _projnorm_from_sums(spec: ModelSpec, s: _Sums) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return (
            np.sqrt(s.s_2)
            * np.sqrt(s.chi_in / (s.chi_in + s.chi_out))
            / np.power(s.s_p + s.w, 1.0 / spec.p)
        )


def _check_mode(spec: ModelSpec, mode: str) -> None:
    if spec.mode != mode:
        raise ConfigError(f"expected a {mode} model, got {spec.mode}")


def sample_projnorm_identity_fixed(
    spec: ModelSpec, rng: RngStream | np.random.Generator, size: int | None = None
):
    """``||P_E X||_2`` for a Haar ``k``-subspace via the power-sum identity.

    Returns a float, or an array when ``size`` is given.
    """
    _check_mode(spec, "grassmann_fixed")
    out = _projnorm_from_sums(spec, _draw_sums(spec, 1 if size is None else size, as_generator(rng)))
    return float(out[0]) if size is None else out


def sample_projnorm_identity_random(
    spec: ModelSpec, rng: RngStream | np.random.Generator, size: int | None = None
):
    """Same as the fixed identity with a Binomial(n, lam) number of active coordinates."""
    _check_mode(spec, "grassmann_random")
    out = _projnorm_from_sums(spec, _draw_sums(spec, 1 if size is None else size, as_generator(rng)))
    return float(out[0]) if size is None else out


def haar_frames(count: int, n: int, k: int, gen: np.random.Generator) -> np.ndarray:
    """``count`` Haar distributed orthonormal ``k``-frames in R^n, shape ``(count, n, k)``.

    QR of a Gaussian matrix, with columns flipped so that ``diag(R) > 0``.
    A draw whose ``R`` has a vanishing diagonal is redrawn once.
    """
    a = gen.standard_normal((count, n, k))
    q, r = np.linalg.qr(a)
    diag = np.diagonal(r, axis1=1, axis2=2)
    bad = np.flatnonzero(np.any(np.abs(diag) <= 1e-12 * math.sqrt(n), axis=1))
    if bad.size:
        q2, r2 = np.linalg.qr(gen.standard_normal((bad.size, n, k)))
        d2 = np.diagonal(r2, axis1=1, axis2=2)
        if np.any(np.abs(d2) <= 1e-12 * math.sqrt(n)):
            raise NumericalError("degenerate Gaussian matrix in Haar frame construction")
        q[bad], diag = q2, diag.copy()
        diag[bad] = d2
    return q * np.sign(diag)[:, None, :]


def sample_projnorm_direct(
    spec: ModelSpec, rng: RngStream | np.random.Generator, size: int | None = None
):
    """Oracle: project explicit ball points onto explicit Haar frames."""
    _check_mode(spec, "grassmann_fixed")
    if spec.n > DIRECT_MAX_N:
        raise ConfigError(f"direct projection is limited to n <= {DIRECT_MAX_N}")
    gen = as_generator(rng)
    total = 1 if size is None else size
    n, k = spec.n, spec.k
    out = np.empty(total)
    rows = max(1, _CHUNK_ELEMS // (2 * n * k))
    for start in range(0, total, rows):
        stop = min(total, start + rows)
        x = sample_ball_points(spec, stop - start, gen)
        frames = haar_frames(stop - start, n, k, gen)
        coeffs = np.einsum("cnk,cn->ck", frames, x)
        out[start:stop] = np.sqrt(np.einsum("ck,ck->c", coeffs, coeffs))
    return float(out[0]) if size is None else out


# --- the statistics Y_n -----------------------------------------------------


def _log_ratio_fixed(spec: ModelSpec, s: _Sums, centre_dim: float) -> np.ndarray:
    # log( n^(1/p) ||P X||_2 / (sqrt(M_p(2)) sqrt(centre_dim)) )
    n, p = spec.n, spec.p
    m2 = moment_Mp(p, 2.0, spec.experimental)
    with np.errstate(divide="ignore"):
        return (
            0.5 * np.log(s.s_2 / (n * m2))
            + 0.5 * np.log(s.chi_in / centre_dim)
            - 0.5 * np.log((s.chi_in + s.chi_out) / n)
            - np.log((s.s_p + s.w) / n) / p
        )


def yn_from_sums(spec: ModelSpec, s: _Sums) -> np.ndarray:
    if spec.mode == "grassmann_fixed":
        centre = float(spec.k)
    elif spec.mode == "grassmann_random":
        centre = spec.lam * spec.n
    else:
        p, q, n = spec.p, spec.q, spec.n
        mq = moment_Mp(p, q, spec.experimental)
        lr = np.log(s.s_q / (n * mq)) / q - np.log((s.s_p + s.w) / n) / p
        return math.sqrt(n) * np.expm1(lr)
    return math.sqrt(centre) * np.expm1(_log_ratio_fixed(spec, s, centre))


@dataclass
class SampleBatch:
    """Replicate-indexed draws of Y_n with the metadata needed to reproduce them."""

    values: np.ndarray
    spec: ModelSpec
    master_seed: int
    stream_id: int
    block_size: int
    backend: str = field(default_factory=lambda: kernels.BACKEND)

    def __len__(self) -> int:
        return self.values.shape[0]

    def metadata(self) -> dict[str, Any]:
        return {
            "model": self.spec.to_dict(),
            "replicates": len(self),
            "master_seed": int(self.master_seed),
            "stream_id": int(self.stream_id),
            "block_size": int(self.block_size),
        }


def _blocks(batch: int, block_size: int) -> list[tuple[int, int, int]]:
    return [(b, start, min(batch, start + block_size)) for b, start in enumerate(range(0, batch, block_size))]


def run_blocks(fn, batch: int, block_size: int, workers: int = 1) -> list:
    """Apply ``fn(block_index, start, stop)`` to every block; results in block order."""
    jobs = _blocks(batch, block_size)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def sample_yn(
    spec: ModelSpec,
    batch: int,
    rng: RngStream,
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> SampleBatch:
    """``batch`` i.i.d. draws of the mode's centred and scaled statistic Y_n.

    Replicates are split into blocks of ``block_size``; block ``b`` draws from
    ``rng.substream("block", b)``, so the result does not depend on
    ``workers``.
    """
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    if block_size < 1:
        raise ValueError(f"block_size must be >= 1, got {block_size}")

    def one(b: int, start: int, stop: int) -> np.ndarray:
        gen = rng.substream("block", b).generator()
        return yn_from_sums(spec, _draw_sums(spec, stop - start, gen))

    parts = run_blocks(one, batch, block_size, workers)
    return SampleBatch(np.concatenate(parts), spec, rng.master_seed, rng.stream_id, block_size)


# --- linearisation ----------------------------------------------------------


@dataclass
class DecomposedSums:
    """Centred sums behind the linear part ``xi_n`` of Y_n, one entry per replicate.

    ``b`` is the sum over the projected Gaussian coordinates centred at ``k``
    (fixed dimension) or at ``lam * n`` (random dimension).
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    xi: np.ndarray
    w: np.ndarray
    yn: np.ndarray


def sample_decomposition(
    spec: ModelSpec,
    batch: int,
    rng: RngStream,
    block_size: int = DEFAULT_BLOCK,
    workers: int = 1,
) -> DecomposedSums:
    """Centred sums ``a, b, c, d`` and ``xi_n`` drawn jointly with Y_n."""
    if spec.mode == "q_norm":
        raise ConfigError("decomposition is defined for the grassmann modes only")
    p, n = spec.p, spec.n
    m2 = moment_Mp(p, 2.0, spec.experimental)
    centre = float(spec.k) if spec.mode == "grassmann_fixed" else spec.lam * n

    def one(b_idx: int, start: int, stop: int):
        gen = rng.substream("block", b_idx).generator()
        s = _draw_sums(spec, stop - start, gen)
        a = s.s_2 - n * m2
        b = s.chi_in - centre
        c = s.s_p - n
        d = s.chi_in + s.chi_out - n
        xi = math.sqrt(centre) * (a / (2 * n * m2) + b / (2 * centre) - c / (p * n) - d / (2 * n))
        return a, b, c, d, xi, s.w, yn_from_sums(spec, s)

    parts = run_blocks(one, batch, block_size, workers)
    return DecomposedSums(*(np.concatenate(col) for col in zip(*parts)))
