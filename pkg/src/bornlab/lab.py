"""Monte Carlo concentration experiments over distribution families.

Four experiment kinds, all built on the same deterministic fan-out: work is
split into fixed-size chunks, chunk k draws from stream.child(k), and chunk
results are concatenated in index order. The chunk size is a function of n
only, so results are bit-identical for a fixed (config, seed) regardless of
the worker count.

Instance generation is vectorized per chunk: a chunk of B instances of any
family materializes as a (B, 2^n) array (or, for tail curves, as the length-B
vector of reference-outcome masses, using per-family shortcuts where a
closed-form marginal exists).
"""

from __future__ import annotations

import math
import multiprocessing
import os
from dataclasses import dataclass

import numpy as np

from .bitmath import RandomStream, SubsetMask
from .circuits import iqp_prob_values
from .families import FamilySpec, GammaLaw, product_prob_values
from .metrics import KernelSpec, mmd2_fourier_batch
from .mps import mps_prob_values

PAIR_METRICS = ("sd", "mmd2", "l1", "tvd")

# 95% two-sided
WILSON_Z = 1.959963984540054


@dataclass(frozen=True)
class TailCurve:
    """Empirical survival Prob(p(x*) >= y/2^n) over a y grid."""

    family: str
    n: int
    y_grid: tuple[float, ...]
    estimates: tuple[float, ...]
    ci_low: tuple[float, ...]
    ci_high: tuple[float, ...]
    trials: int


@dataclass(frozen=True)
class MomentReport:
    """Mean/variance of a per-instance (or per-pair) statistic."""

    family: str
    n: int
    metric: str
    mean: float
    variance: float
    se_mean: float
    se_variance: float
    trials: int
    sigma: float | None = None


@dataclass(frozen=True)
class AnticoncentrationReport:
    family: str
    n: int
    second_moment_statistic: float  # 2^{2n} E[p(x*)^2]
    second_moment_se: float
    tail_at_half: float  # Prob(p(x*) >= 1/(2N))
    tail_ci_low: float
    tail_ci_high: float
    trials: int


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; valid near 0 and 1."""
    if trials < 1:
        raise ValueError("domain error: trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("domain error: successes out of range")
    phat = successes / trials
    denom = 1.0 + z**2 / trials
    center = (phat + z**2 / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


def _dense_chunk(n: int) -> int:
    # ~1M float64 cells per chunk, never more than 2^14 instances
    return max(1, min(1 << 14, (1 << 20) >> n))


def _scatter_rows(values: np.ndarray, N: int, rng: np.random.Generator) -> np.ndarray:
    """Place each row of masses on an independent uniform K-subset of [N].

    Ranking iid uniform keys gives an exactly uniform subset per row; this is
    the batched counterpart of the sequential Fisher-Yates used for single
    instances.
    """
    B, K = values.shape
    out = np.zeros((B, N))
    if K == N:
        return values.copy()
    keys = rng.random((B, N))
    idx = np.argpartition(keys, K, axis=1)[:, :K]
    np.put_along_axis(out, idx, values, axis=1)
    return out


def _normalized_rows(draw, shape, rng) -> np.ndarray:
    y = draw(shape)
    totals = y.sum(axis=1)
    while True:
        bad = np.flatnonzero(totals <= 0)
        if bad.size == 0:
            break
        y[bad] = draw((bad.size, shape[1]))
        totals[bad] = y[bad].sum(axis=1)
    return y / totals[:, None]


def instance_prob_values(
    family: FamilySpec, n: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """Dense output distributions of `count` fresh instances, shape (count, 2^n)."""
    N = 1 << n
    kind = family.kind
    if kind == "product":
        return product_prob_values(rng.random((count, n)))
    if kind == "iqp_product":
        theta = 2.0 * np.arccos(np.sqrt(rng.random((count, n))))
        return product_prob_values(np.cos(theta / 2.0) ** 2)
    if kind in ("dirichlet", "pareto"):
        law = family.underlying()
        return _normalized_rows(lambda s: law.sample(rng, s), (count, N), rng)
    if kind == "peaked":
        K = family.support_size(n)
        law = family.underlying()
        masses = _normalized_rows(lambda s: law.sample(rng, s), (count, K), rng)
        return _scatter_rows(masses, N, rng)
    if kind == "iqp":
        return iqp_prob_values(n, count, rng, family.include_singletons)
    if kind == "peaked_iqp":
        K = family.support_size(n)
        m = K.bit_length() - 1
        if 1 << m != K:
            raise ValueError(f"domain error: peaked_iqp support must be a power of two, got {K}")
        masses = iqp_prob_values(m, count, rng)
        return _scatter_rows(masses, N, rng)
    if kind == "mps":
        return mps_prob_values(n, family.bond_dimension(n), count, rng)
    if kind == "uniform":
        return np.full((count, N), 1.0 / N)
    if kind == "point":
        out = np.zeros((count, N))
        out[np.arange(count), rng.integers(0, N, count)] = 1.0
        return out
    raise ValueError(f"domain error: no dense generator for family {kind!r}")


def reference_mass_values(
    family: FamilySpec, n: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    """p(x*) at the reference outcome x* = 0...0 for `count` fresh instances.

    Every implemented family is exchangeable over outcomes, so the tail law
    of p(x*) does not depend on the choice of x*. Families with a closed-form
    marginal use it (product: product of n uniforms; Dirichlet(a):
    Beta(a, a(N-1)) via gamma additivity; peaked: Bernoulli(K/N) thinning of
    the K-dimensional marginal); the rest fall back to dense generation.
    """
    N = 1 << n
    kind = family.kind
    if kind == "product":
        return np.prod(rng.random((count, n)), axis=1)
    if kind == "iqp_product":
        theta = 2.0 * np.arccos(np.sqrt(rng.random((count, n))))
        return np.prod(np.cos(theta / 2.0) ** 2, axis=1)
    if kind == "dirichlet":
        return rng.beta(family.alpha, family.alpha * (N - 1), count)
    if kind == "peaked" and isinstance(family.underlying(), GammaLaw):
        K = family.support_size(n)
        hit = rng.random(count) < K / N
        if K == 1:
            return hit.astype(float)
        return np.where(hit, rng.beta(family.alpha, family.alpha * (K - 1), count), 0.0)
    if kind == "pareto":
        law = family.underlying()
        first = law.sample(rng, count)
        rest = law.sample(rng, (count, N - 1)).sum(axis=1) if N > 1 else 0.0
        return first / (first + rest)
    if kind == "peaked_iqp":
        K = family.support_size(n)
        m = K.bit_length() - 1
        masses = iqp_prob_values(m, count, rng)
        hit = rng.random(count) < K / N
        pick = masses[np.arange(count), rng.integers(0, K, count)]
        return np.where(hit, pick, 0.0)
    if kind == "uniform":
        return np.full(count, 1.0 / N)
    if kind == "point":
        return (rng.integers(0, N, count) == 0).astype(float)
    return instance_prob_values(family, n, count, rng)[:, 0]


# chunk workers; module level so they pickle for multiprocessing

def _tail_chunk(task) -> np.ndarray:
    family, n, stream, index, count = task
    return reference_mass_values(family, n, count, stream.child(index).generator)


def _pairwise_chunk(task) -> np.ndarray:
    family, n, metric, kernel, stream, index, count = task
    rng = stream.child(index).generator
    diff = instance_prob_values(family, n, count, rng) - instance_prob_values(
        family, n, count, rng
    )
    if metric == "sd":
        return np.einsum("ij,ij->i", diff, diff)
    if metric == "mmd2":
        return mmd2_fourier_batch(diff, n, kernel)
    values = np.abs(diff).sum(axis=1)
    return values if metric == "l1" else 0.5 * values


def _observable_chunk(task) -> np.ndarray:
    family, n, mask, stream, index, count = task
    rng = stream.child(index).generator
    x = np.arange(1 << n, dtype=np.uint64)
    signs = 1.0 - 2.0 * (np.bitwise_count(x & np.uint64(mask)) % 2)
    return instance_prob_values(family, n, count, rng) @ signs


def _uniform_distance_chunk(task) -> np.ndarray:
    family, n, stream, index, count = task
    rng = stream.child(index).generator
    diff = instance_prob_values(family, n, count, rng) - 1.0 / (1 << n)
    return np.einsum("ij,ij->i", diff, diff)


def _parallel_map(fn, tasks: list, workers: int | None) -> list:
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with multiprocessing.Pool(processes=min(workers, len(tasks))) as pool:
        return pool.map(fn, tasks)


def _collect(fn, fixed: tuple, total: int, chunk: int, stream: RandomStream, workers) -> np.ndarray:
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    tasks = [fixed + (stream, k, size) for k, size in enumerate(sizes)]
    return np.concatenate(_parallel_map(fn, tasks, workers))


def _moment_report(
    family: FamilySpec, n: int, metric: str, values: np.ndarray, sigma: float | None
) -> MomentReport:
    T = values.size
    mean = float(values.mean())
    variance = float(values.var(ddof=1)) if T > 1 else 0.0
    se_mean = math.sqrt(variance / T)
    centered = values - mean
    m4 = float((centered**4).mean())
    var_of_s2 = (m4 - variance**2 * (T - 3) / (T - 1)) / T if T > 1 else 0.0
    return MomentReport(
        family=family.label(),
        n=n,
        metric=metric,
        mean=mean,
        variance=variance,
        se_mean=se_mean,
        se_variance=math.sqrt(max(var_of_s2, 0.0)),
        trials=T,
        sigma=sigma,
    )


def _mass_chunk_size(family: FamilySpec, n: int) -> int:
    if family.kind in ("product", "iqp_product", "dirichlet", "uniform", "point"):
        return 1 << 16
    if family.kind == "peaked" and isinstance(family.underlying(), GammaLaw):
        return 1 << 16
    if family.kind == "peaked_iqp":
        return 1 << 14
    return _dense_chunk(n)


def estimate_tail_curve(
    family: FamilySpec,
    n: int,
    y_grid,
    trials: int,
    stream: RandomStream,
    workers: int | None = 1,
) -> TailCurve:
    """Empirical Prob(p(x*) >= y/2^n) across the grid, with 95% Wilson CIs.

    One pooled sample of reference masses serves the whole grid, which also
    makes the point estimates exactly non-increasing in y.
    """
    if trials < 100:
        raise ValueError("domain error: need at least 100 trials")
    grid = sorted(float(y) for y in y_grid)
    if not grid:
        raise ValueError("domain error: empty y grid")
    masses = _collect(
        _tail_chunk, (family, n), trials, _mass_chunk_size(family, n), stream, workers
    )
    N = 1 << n
    estimates, lows, highs = [], [], []
    for y in grid:
        hits = int(np.count_nonzero(masses >= y / N))
        lo, hi = wilson_interval(hits, trials)
        estimates.append(hits / trials)
        lows.append(lo)
        highs.append(hi)
    return TailCurve(
        family=family.label(),
        n=n,
        y_grid=tuple(grid),
        estimates=tuple(estimates),
        ci_low=tuple(lows),
        ci_high=tuple(highs),
        trials=trials,
    )


def _kernel_for(sigma: float | None, metric: str) -> KernelSpec | None:
    if metric != "mmd2":
        return None
    if sigma is None:
        raise ValueError("domain error: mmd2 requires a bandwidth (sigma; 0 means rho=0)")
    if sigma == 0.0:
        return KernelSpec(rho=0.0)
    return KernelSpec(sigma=float(sigma))


def pairwise_loss_values(
    family: FamilySpec,
    n: int,
    metric: str,
    sigma: float | None = None,
    pairs: int = 10_000,
    stream: RandomStream = RandomStream(0),
    workers: int | None = 1,
) -> np.ndarray:
    """Loss values of `pairs` independent instance pairs, in draw order."""
    if metric not in PAIR_METRICS:
        raise ValueError(f"domain error: unknown metric {metric!r}; known: {PAIR_METRICS}")
    if pairs < 100:
        raise ValueError("domain error: need at least 100 pairs")
    kernel = _kernel_for(sigma, metric)
    return _collect(
        _pairwise_chunk,
        (family, n, metric, kernel),
        pairs,
        _dense_chunk(n),
        stream,
        workers,
    )


def pairwise_loss_moments(
    family: FamilySpec,
    n: int,
    metric: str,
    sigma: float | None = None,
    pairs: int = 10_000,
    stream: RandomStream = RandomStream(0),
    workers: int | None = 1,
) -> MomentReport:
    """Mean/variance of a loss across independent instance pairs."""
    values = pairwise_loss_values(family, n, metric, sigma, pairs, stream, workers)
    return _moment_report(family, n, metric, values, sigma)


def anticoncentration_statistic(
    family: FamilySpec,
    n: int,
    trials: int,
    stream: RandomStream,
    workers: int | None = 1,
) -> AnticoncentrationReport:
    """2^{2n} E[p(x*)^2] and the survival at threshold 1/(2N)."""
    if trials < 100:
        raise ValueError("domain error: need at least 100 trials")
    masses = _collect(
        _tail_chunk, (family, n), trials, _mass_chunk_size(family, n), stream, workers
    )
    N = 1 << n
    sq = masses**2
    statistic = float(N**2 * sq.mean())
    se = float(N**2 * sq.std(ddof=1) / math.sqrt(trials))
    hits = int(np.count_nonzero(masses >= 0.5 / N))
    lo, hi = wilson_interval(hits, trials)
    return AnticoncentrationReport(
        family=family.label(),
        n=n,
        second_moment_statistic=statistic,
        second_moment_se=se,
        tail_at_half=hits / trials,
        tail_ci_low=lo,
        tail_ci_high=hi,
        trials=trials,
    )


def diagonal_observable_variance(
    family: FamilySpec,
    n: int,
    S: SubsetMask,
    trials: int,
    stream: RandomStream,
    workers: int | None = 1,
) -> MomentReport:
    """Across-instance moments of <Z_S> = sum_x chi_S(x) p(x)."""
    if S.n != n:
        raise ValueError(f"dimension error: n mismatch {S.n} != {n}")
    if S.weight == 0:
        raise ValueError("domain error: S must be non-empty")
    if trials < 2:
        raise ValueError("domain error: need at least 2 trials for a variance")
    values = _collect(
        _observable_chunk, (family, n, S.mask), trials, _dense_chunk(n), stream, workers
    )
    positions = "".join(str(i + 1) for i in range(n) if (S.mask >> i) & 1)
    return _moment_report(family, n, f"z{positions}", values, None)


def distance_to_uniform_moments(
    family: FamilySpec,
    n: int,
    trials: int,
    stream: RandomStream,
    workers: int | None = 1,
) -> MomentReport:
    """Moments of the squared distance to the uniform distribution."""
    if trials < 100:
        raise ValueError("domain error: need at least 100 trials")
    values = _collect(
        _uniform_distance_chunk, (family, n), trials, _dense_chunk(n), stream, workers
    )
    return _moment_report(family, n, "sd_to_uniform", values, None)
