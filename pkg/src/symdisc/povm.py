"""Optimal unambiguous discrimination of equiprobable symmetric states.

The measurement is realised by coupling the system to a qubit ancilla with the
block unitary::

    U = [[A_s, -A_I],
         [A_I,  A_s]]

acting on vectors laid out ancilla-major: entries ``0..N-1`` carry ancilla
``|0>_a`` (conclusive branch), entries ``N..2N-1`` carry ``|1>_a``.  For
symmetric families both ``A_s`` and ``A_I`` are diagonal in the logical basis,
with ``A_s = diag(c_min / c_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ProbabilityOutOfRange
from .states import (
    SymmetricFamily,
    as_coefficients,
    build_family,
    min_index,
)

TOL = 1e-10


def optimal_probability(c) -> float:
    """Largest equal success probability, ``N * min_k |c_k|^2``."""
    arr = as_coefficients(c)
    return float(arr.size * np.min(np.abs(arr)) ** 2)


def two_state_probability(psi_plus, psi_minus) -> float:
    """Two-state unambiguous limit ``1 - |<psi_+|psi_->|``."""
    return float(1.0 - abs(np.vdot(psi_plus, psi_minus)))


def _ratios(c) -> np.ndarray:
    arr = as_coefficients(c, positive=True)
    r = arr[min_index(arr)] / arr
    r[r > 1.0] = 1.0
    return r


def success_operator(c) -> np.ndarray:
    return np.diag(_ratios(c))


def failure_operator(c) -> np.ndarray:
    arr = as_coefficients(c, positive=True)
    c_min = arr[min_index(arr)]
    # sqrt(c_k^2 - c_min^2) / c_k avoids cancellation in 1 - r^2
    return np.diag(np.sqrt(np.clip((arr - c_min) * (arr + c_min), 0.0, None)) / arr)


@dataclass(frozen=True)
class ConditionalUnitary:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0] // 2

    def blocks(self):
        n = self.dim
        m = self.matrix
        return m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:]

    def unitarity_residual(self) -> float:
        m = self.matrix
        return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2))


def conditional_unitary(c) -> ConditionalUnitary:
    a_s = success_operator(c)
    a_i = failure_operator(c)
    return ConditionalUnitary(np.block([[a_s, -a_i], [a_i, a_s]]))


def fourier(n: int) -> np.ndarray:
    """``F[k, l] = exp(2 pi i k l / N) / sqrt(N)``, so ``F|l> = |u_l>``."""
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def inverse_fourier(n: int) -> np.ndarray:
    return fourier(n).conj().T


def _psd_sqrt(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def detection_operators(family: SymmetricFamily, p: float) -> np.ndarray:
    """Conclusive Kraus operators ``A_k``, stacked along axis 0.

    ``A_k = sqrt(p) / <recip_k|psi_k> * |u_k><recip_k|`` maps ``psi_k`` to
    ``sqrt(p) u_k`` and annihilates every other family member.  Raises
    :class:`ProbabilityOutOfRange` when ``p`` is negative or so large that
    ``1 - sum A_k^dag A_k`` stops being positive.
    """
    n = family.dim
    if not np.isfinite(p) or p < 0.0:
        raise ProbabilityOutOfRange(f"success probability must be >= 0, got {p!r}")
    u = fourier(n).T  # rows are u_k
    norms = np.einsum("kr,kr->k", family.reciprocals.conj(), family.states)
    ops = np.sqrt(p) / norms[:, None, None] * np.einsum(
        "ki,kj->kij", u, family.reciprocals.conj()
    )
    residual = np.eye(n) - np.einsum("kji,kjl->il", ops.conj(), ops)
    lowest = np.linalg.eigvalsh((residual + residual.conj().T) / 2)[0]
    if lowest < -TOL:
        raise ProbabilityOutOfRange(
            f"p={p!r} exceeds the optimal bound {n * np.min(np.abs(family.coefficients)) ** 2!r}"
        )
    return ops


@dataclass(frozen=True)
class Povm:
    detection_ops: np.ndarray
    success_op: np.ndarray
    failure_op: np.ndarray
    p_success: float

    @property
    def dim(self) -> int:
        return self.success_op.shape[0]

    def elements(self):
        """Positive operators ``A_k^dag A_k`` followed by ``A_I^dag A_I``."""
        conclusive = [a.conj().T @ a for a in self.detection_ops]
        return conclusive + [self.failure_op.conj().T @ self.failure_op]


def build_povm(c, p: float | None = None) -> Povm:
    """POVM at success probability ``p`` (the optimum when omitted)."""
    family = build_family(as_coefficients(c, positive=True))
    if p is None:
        p = optimal_probability(family.coefficients)
        return Povm(
            detection_operators(family, p),
            success_operator(family.coefficients),
            failure_operator(family.coefficients),
            p,
        )
    ops = detection_operators(family, p)
    conclusive = np.einsum("kji,kjl->il", ops.conj(), ops)
    n = family.dim
    return Povm(ops, _psd_sqrt(conclusive), _psd_sqrt(np.eye(n) - conclusive), float(p))


def verify_completeness(povm: Povm) -> float:
    """Operator-norm residual of ``sum_k A_k^dag A_k + A_I^dag A_I - 1``."""
    total = sum(povm.elements())
    return float(np.linalg.norm(total - np.eye(povm.dim), 2))


@dataclass(frozen=True)
class ProtocolOutcome:
    input_index: int
    p_conclusive: float
    conclusive_state: np.ndarray
    failure_state: np.ndarray | None
    fourier_click_distribution: np.ndarray
    output: np.ndarray


def apply_protocol(c, l: int) -> ProtocolOutcome:
    """Run ``psi_l (x) |0>_a`` through the conditional unitary and read it out.

    The conclusive block is renormalised to give ``u_l`` and is then sent
    through the inverse Fourier transform; the click distribution is the path
    distribution of that result.
    """
    family = build_family(as_coefficients(c, positive=True))
    n = family.dim
    if not 0 <= l < n:
        raise IndexError(f"state index {l} out of range for N={n}")
    u = conditional_unitary(family.coefficients).matrix
    out = u @ np.concatenate([family.states[l], np.zeros(n)])
    top, bottom = out[:n], out[n:]
    p = float(np.vdot(top, top).real)
    conclusive = top / np.sqrt(p)
    fail_norm = float(np.linalg.norm(bottom))
    failure = bottom / fail_norm if fail_norm > 1e-15 else None
    clicks = np.abs(inverse_fourier(n) @ conclusive) ** 2
    return ProtocolOutcome(l, p, conclusive, failure, clicks, out)


def same_ray(a, b, tol: float = TOL) -> bool:
    """True when unit vectors ``a`` and ``b`` differ only by a global phase."""
    return abs(abs(np.vdot(a, b)) - 1.0) < tol
