"""Random matrix product states with exact (perfect) sampling.

A state over n qubits is a chain of site tensors A_i of shape
(D_{i-1}, 2, D_i) with boundary dimensions 1, internal dimensions capped at
min(chi, 2^i, 2^(n-i)), and amplitudes

    psi(x) = A_1[x_1] A_2[x_2] ... A_n[x_n].

Site i corresponds to qubit i (LSB-first index convention, as everywhere in
the package). Random states draw iid standard complex Gaussian entries and
are then brought to left-canonical form by a QR sweep; dropping the final
1x1 factor normalizes the state exactly.

With left-canonical tensors the accumulated left environment is the
identity, so suffix marginals are exact inner products and sampling walks
site n -> 1 drawing each bit from its exact conditional given the bits
already fixed. One sample costs O(n chi^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bitmath import BitString, ProbVector, SampleSet, as_generator, validate_prob_vector

MAX_STATEVECTOR_QUBITS = 16


@dataclass(frozen=True, eq=False)
class MpsState:
    """Left-canonical matrix product state."""

    n: int
    chi: int
    tensors: tuple[np.ndarray, ...]
    canonical: bool = False

    def __post_init__(self):
        if len(self.tensors) != self.n:
            raise ValueError(f"expected {self.n} site tensors")
        left = 1
        for i, t in enumerate(self.tensors):
            if t.ndim != 3 or t.shape[1] != 2:
                raise ValueError(f"site {i + 1} tensor must be (left, 2, right)")
            if t.shape[0] != left:
                raise ValueError(f"site {i + 1} left dimension mismatch")
            left = t.shape[2]
        if left != 1:
            raise ValueError("right boundary dimension must be 1")

    @property
    def bond_dimensions(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.tensors[:-1])


def bond_dims(n: int, chi: int) -> list[int]:
    """Capped bond dimensions [1, D_1, ..., D_{n-1}, 1]."""
    return [1] + [min(chi, 2**i, 2 ** (n - i)) for i in range(1, n)] + [1]


def random_mps(n: int, chi: int, stream) -> MpsState:
    """Random state: iid complex Gaussian tensors, left-canonicalized."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if chi < 1:
        raise ValueError("bond dimension must be at least 1")
    rng = as_generator(stream)
    dims = bond_dims(n, chi)
    tensors = []
    for i in range(n):
        shape = (dims[i], 2, dims[i + 1])
        tensors.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    tensors = _left_canonicalize(tensors)
    return MpsState(n=n, chi=chi, tensors=tuple(tensors), canonical=True)


def _left_canonicalize(tensors: list[np.ndarray]) -> list[np.ndarray]:
    """QR sweep absorbing the upper factor rightward; drops the final scalar.

    The capped dimensions guarantee right <= 2 * left at every site, so the
    reduced QR never shrinks a bond and all shapes are preserved.
    """
    out = list(tensors)
    carry = None
    for i, t in enumerate(out):
        if carry is not None:
            t = np.einsum("kd,dse->kse", carry, t)
        dl, _, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * 2, dr))
        out[i] = q.reshape(dl, 2, dr)
        carry = r
    return out


def mps_probability(state: MpsState, x: BitString) -> float:
    """|psi(x)|^2 by left-to-right contraction, O(n chi^2)."""
    if x.n != state.n:
        raise ValueError(f"dimension error: n mismatch {x.n} != {state.n}")
    v = np.ones(1, dtype=np.complex128)
    for i, t in enumerate(state.tensors):
        v = v @ t[:, (x.bits >> i) & 1, :]
    return float(abs(v[0]) ** 2)


def mps_state_vector(state: MpsState) -> np.ndarray:
    """Dense amplitudes, index bit (i-1) = qubit i. Capped at n = 16."""
    if state.n > MAX_STATEVECTOR_QUBITS:
        raise ValueError(
            f"resource error: n={state.n} exceeds statevector cap "
            f"{MAX_STATEVECTOR_QUBITS}"
        )
    T = state.tensors[0][0]  # (2, D)
    for t in state.tensors[1:]:
        T = np.einsum("xd,dse->xse", T, t)
        T = T.reshape(-1, t.shape[2])
    psi = T[:, 0]
    # axes currently run (x_1, ..., x_n) with x_1 slowest; reverse for LSB-first
    psi = psi.reshape((2,) * state.n).transpose(tuple(range(state.n - 1, -1, -1)))
    return psi.reshape(-1)


def mps_prob_vector(state: MpsState) -> ProbVector:
    p = np.abs(mps_state_vector(state)) ** 2
    return validate_prob_vector(p / p.sum(), state.n)


def mps_sample(state: MpsState, stream, count: int) -> SampleSet:
    """Perfect sampling: exact conditionals, site n down to 1.

    Left-canonical form makes the suffix marginal of bits i..n equal to
    |A_i[x_i] ... A_n[x_n]|^2, so each bit is drawn from its exact
    conditional and the joint law is exactly |psi|^2.
    """
    if not state.canonical:
        raise ValueError("perfect sampling requires a canonical state")
    rng = as_generator(stream)
    outcomes = np.zeros(count, dtype=np.uint64)
    w = np.ones((count, 1), dtype=np.complex128)  # suffix vectors, unit norm
    for i in range(state.n - 1, -1, -1):
        t = state.tensors[i]
        t0 = w @ t[:, 0, :].T
        t1 = w @ t[:, 1, :].T
        p1 = np.sum(np.abs(t1) ** 2, axis=1)
        p0 = np.sum(np.abs(t0) ** 2, axis=1)
        # p0 + p1 == |w|^2 == 1 up to rounding; normalize the coin explicitly
        take1 = rng.random(count) < p1 / (p0 + p1)
        outcomes |= take1.astype(np.uint64) << np.uint64(i)
        w = np.where(take1[:, None], t1, t0)
        w /= np.sqrt(np.where(take1, p1, p0))[:, None]
    return SampleSet(state.n, outcomes, family=f"mps(chi={state.chi})")


def mps_prob_values(n: int, chi: int, batch: int, rng: np.random.Generator) -> np.ndarray:
    """Dense output distributions of `batch` random MPS, shape (batch, 2^n).

    Batched mirror of random_mps + mps_prob_vector using stacked QR; the
    ensembles coincide draw-for-draw in distribution (not in stream order).
    """
    if n > MAX_STATEVECTOR_QUBITS:
        raise ValueError(
            f"resource error: n={n} exceeds statevector cap {MAX_STATEVECTOR_QUBITS}"
        )
    dims = bond_dims(n, chi)
    tensors = []
    for i in range(n):
        shape = (batch, dims[i], 2, dims[i + 1])
        tensors.append(rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    carry = None
    for i in range(n):
        t = tensors[i]
        if carry is not None:
            t = np.einsum("bkd,bdse->bkse", carry, t)
        b, dl, _, dr = t.shape
        q, r = np.linalg.qr(t.reshape(b, dl * 2, dr))
        tensors[i] = q.reshape(b, dl, 2, dr)
        carry = r
    T = tensors[0][:, 0]  # (B, 2, D)
    for t in tensors[1:]:
        T = np.einsum("bxd,bdse->bxse", T, t)
        T = T.reshape(batch, -1, t.shape[3])
    psi = T[:, :, 0].reshape((batch,) + (2,) * n)
    psi = psi.transpose((0,) + tuple(range(n, 0, -1))).reshape(batch, -1)
    p = np.abs(psi) ** 2
    return p / p.sum(axis=1, keepdims=True)
