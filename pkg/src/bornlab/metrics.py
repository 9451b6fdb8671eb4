"""Loss functions between distributions over bit strings.

Implements the squared distance, the maximum mean discrepancy (MMD^2) under
the Gaussian-Hamming kernel in three interchangeable forms (kernel double
sum, Fourier diagonalization, two-sample U-statistic), the associated
two-sample test threshold, and 1-norm / total-variation distances.

The kernel k(x, y) = exp(-d_H(x, y)/(2 sigma^2)) = rho^{d_H} with
rho = exp(-1/(2 sigma^2)) is diagonal in the character basis with
eigenvalue (1-rho)^{|S|} (1+rho)^{n-|S|} / 2^n on chi_S, so

    MMD^2(p, q) = (1/2^n) sum_S (1-rho)^{|S|} (1+rho)^{n-|S|} (phat_S - qhat_S)^2.

At rho = 0 the weights collapse to 1 and Parseval turns this into the
squared distance; that limit is accepted directly (rho=0) even though no
finite bandwidth reaches it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitmath import BitString, ProbVector, SampleSet, fwht, hamming_distance, popcounts

# the kernel double sum is O(4^n); past this, use mmd2_fourier
MAX_KERNEL_SUM_QUBITS = 13

LOSS_METRICS = ("sd", "mmd2", "mmd2_estimate", "l1", "tvd")


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian-Hamming kernel, given either a bandwidth or rho directly.

    k(x, x) = 1, so the kernel bound K_max is always 1.
    """

    sigma: float | None = None
    rho: float | None = None

    def __post_init__(self):
        if (self.sigma is None) == (self.rho is None):
            raise ValueError("give exactly one of sigma, rho")
        if self.sigma is not None:
            if not self.sigma > 0:
                raise ValueError(f"domain error: sigma must be positive, got {self.sigma}")
            object.__setattr__(self, "sigma", float(self.sigma))
            object.__setattr__(self, "rho", math.exp(-1.0 / (2.0 * self.sigma**2)))
        else:
            if not 0.0 <= self.rho < 1.0:
                raise ValueError(f"domain error: rho must lie in [0, 1), got {self.rho}")
            object.__setattr__(self, "rho", float(self.rho))

    @property
    def k_max(self) -> float:
        return 1.0


@dataclass(frozen=True)
class LossValue:
    """A computed loss with the metadata needed to interpret it."""

    metric: str
    value: float
    sigma: float | None = None
    m: int | None = None
    l: int | None = None

    def __post_init__(self):
        if self.metric not in LOSS_METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; known: {LOSS_METRICS}")
        if self.metric in ("sd", "mmd2") and self.value < -1e-12:
            raise ValueError(f"{self.metric} must be non-negative, got {self.value}")
        if self.metric == "l1" and not -1e-12 <= self.value <= 2 + 1e-12:
            raise ValueError(f"l1 must lie in [0, 2], got {self.value}")


def _check_same_n(p: ProbVector, q: ProbVector):
    if p.n != q.n:
        raise ValueError(f"dimension error: n mismatch {p.n} != {q.n}")


def squared_distance(p: ProbVector, q: ProbVector) -> float:
    """sum_x (p(x) - q(x))^2."""
    _check_same_n(p, q)
    d = p.values - q.values
    return float(d @ d)


def gaussian_hamming_kernel(x: BitString, y: BitString, spec: KernelSpec) -> float:
    if x.n != y.n:
        raise ValueError(f"dimension error: n mismatch {x.n} != {y.n}")
    return float(spec.rho ** hamming_distance(x, y))


def fourier_weights(n: int, spec: KernelSpec) -> np.ndarray:
    """Kernel eigenvalue (1-rho)^|S| (1+rho)^{n-|S|} per subset mask."""
    w = popcounts(n).astype(float)
    return (1.0 - spec.rho) ** w * (1.0 + spec.rho) ** (n - w)


def mmd2_fourier(p: ProbVector, q: ProbVector, spec: KernelSpec) -> float:
    """MMD^2 via two Walsh-Hadamard transforms, O(N log N)."""
    _check_same_n(p, q)
    ghat = fwht(p.values - q.values)
    return float(fourier_weights(p.n, spec) @ ghat**2) / (1 << p.n)


def mmd2_fourier_batch(diffs: np.ndarray, n: int, spec: KernelSpec) -> np.ndarray:
    """MMD^2 of many difference vectors at once; diffs has shape (..., 2^n)."""
    ghat = fwht(np.asarray(diffs, dtype=float))
    return (ghat**2) @ fourier_weights(n, spec) / (1 << n)


def mmd2_population(p: ProbVector, q: ProbVector, spec: KernelSpec) -> float:
    """Kernel double sum sum_{x,y} k(x,y) g(x) g(y), g = p - q.

    Kept as the independent cross-check of mmd2_fourier; blocked so the
    full N x N kernel matrix is never materialized.
    """
    _check_same_n(p, q)
    if p.n > MAX_KERNEL_SUM_QUBITS:
        raise ValueError(
            f"resource error: n={p.n} exceeds the kernel double-sum cap "
            f"{MAX_KERNEL_SUM_QUBITS}; use mmd2_fourier"
        )
    g = p.values - q.values
    x = np.arange(1 << p.n, dtype=np.uint64)
    total = 0.0
    block = 1 << 9
    for start in range(0, x.size, block):
        d = np.bitwise_count(x[start : start + block, None] ^ x[None, :])
        total += g[start : start + block] @ (spec.rho**d.astype(float)) @ g
    return float(total)


def _mean_pairwise_kernel(a: np.ndarray, b: np.ndarray, rho: float, skip_diagonal: bool) -> float:
    d = np.bitwise_count(a[:, None] ^ b[None, :]).astype(float)
    k = rho**d
    if skip_diagonal:
        m = a.size
        return float((k.sum() - np.trace(k)) / (m * (m - 1)))
    return float(k.mean())


def mmd2_unbiased(X: SampleSet, Y: SampleSet, spec: KernelSpec) -> float:
    """Two-sample U-statistic whose expectation is the population MMD^2.

    Averages the kernel over distinct ordered pairs within each sample and
    over all cross pairs; can be negative and is never clamped (clamping
    would break the unbiasedness the concentration bound relies on).
    """
    if X.n != Y.n:
        raise ValueError(f"dimension error: n mismatch {X.n} != {Y.n}")
    if len(X) < 2 or len(Y) < 2:
        raise ValueError("domain error: need at least 2 samples on each side")
    xx = _mean_pairwise_kernel(X.outcomes, X.outcomes, spec.rho, skip_diagonal=True)
    yy = _mean_pairwise_kernel(Y.outcomes, Y.outcomes, spec.rho, skip_diagonal=True)
    xy = _mean_pairwise_kernel(X.outcomes, Y.outcomes, spec.rho, skip_diagonal=False)
    return xx + yy - 2.0 * xy


def mmd_test_threshold(m: int, l: int, alpha: float, k_max: float = 1.0) -> float:
    """Acceptance threshold K sqrt(8 ln(1/alpha)/(m+l)) for H0: p = q."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"domain error: alpha must lie in (0, 1], got {alpha}")
    if m + l < 1:
        raise ValueError("domain error: need at least one sample")
    return k_max * math.sqrt(8.0 * math.log(1.0 / alpha) / (m + l))


def l1_distance(p: ProbVector, q: ProbVector) -> float:
    """sum_x |p(x) - q(x)|, in [0, 2]."""
    _check_same_n(p, q)
    return float(np.abs(p.values - q.values).sum())


def total_variation_distance(p: ProbVector, q: ProbVector) -> float:
    """Half the 1-norm; the other common TVD convention.

    Both values are reported downstream because the literature uses the
    names interchangeably.
    """
    return 0.5 * l1_distance(p, q)


def triangle_bounds(dpu: float, dqu: float) -> tuple[float, float]:
    """Sandwich for the squared distance between p and q given their
    squared distances to a common reference: ((sqrt a - sqrt b)^2,
    (sqrt a + sqrt b)^2)."""
    if dpu < 0 or dqu < 0:
        raise ValueError("domain error: squared distances must be non-negative")
    lo = (math.sqrt(dpu) - math.sqrt(dqu)) ** 2
    hi = (math.sqrt(dpu) + math.sqrt(dqu)) ** 2
    return lo, hi
