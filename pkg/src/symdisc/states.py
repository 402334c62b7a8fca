"""Symmetric state families generated by the cyclic phase operator.

A family is fixed by a real, positive seed amplitude vector ``c``::

    |psi_0> = sum_k c_k |k>,      |psi_l> = Z^l |psi_0>,
    Z|k> = exp(2 pi i k / N) |k>.

Amplitudes can also be given as N-1 hyperspherical angles, which is the
parametrization the optical preparation stage uses directly (one rotation
per cascade step).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AngleOutOfDomain,
    InvalidCoefficients,
    NonPositiveCoefficient,
    ZeroCoefficient,
)

NORM_TOL = 1e-12
DERIVED_TOL = 1e-10


def as_coefficients(c, *, positive: bool = False) -> np.ndarray:
    """Validate and return a real amplitude vector as a float array."""
    arr = np.asarray(c, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidCoefficients(f"need at least 2 amplitudes, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidCoefficients("amplitudes must be finite")
    norm = float(np.sum(arr**2))
    if abs(norm - 1.0) > NORM_TOL:
        raise InvalidCoefficients(f"sum of squared amplitudes is {norm!r}, expected 1")
    if np.any(arr == 0.0):
        raise ZeroCoefficient(
            "zero amplitude: the symmetric family is linearly dependent"
        )
    if positive and np.any(arr < 0.0):
        raise NonPositiveCoefficient("amplitudes must be strictly positive")
    return arr


def as_angles(thetas) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(thetas, dtype=float))
    if arr.ndim != 1 or arr.size < 1:
        raise AngleOutOfDomain("need at least one angle")
    bad = ~((arr > 0.0) & (arr < np.pi / 2))
    if np.any(bad):
        raise AngleOutOfDomain(
            f"angles must lie in the open interval (0, pi/2); offending: {arr[bad].tolist()}"
        )
    return arr


def coefficients_from_angles(thetas) -> np.ndarray:
    """Map N-1 angles to N amplitudes.

    ``c_0 = cos t1``, ``c_k = cos t_{k+1} * prod_{j<=k} sin t_j`` and the last
    amplitude is the full product of sines.
    """
    t = as_angles(thetas)
    n = t.size + 1
    c = np.empty(n)
    tail = 1.0
    for k in range(n - 1):
        c[k] = tail * np.cos(t[k])
        tail *= np.sin(t[k])
    c[n - 1] = tail
    assert abs(np.sum(c**2) - 1.0) < NORM_TOL
    return c


def angles_from_coefficients(c) -> np.ndarray:
    """Inverse of :func:`coefficients_from_angles` for strictly positive amplitudes."""
    arr = np.asarray(c, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidCoefficients(f"need at least 2 amplitudes, got shape {arr.shape}")
    if np.any(arr <= 0.0):
        raise NonPositiveCoefficient("angles exist only for strictly positive amplitudes")
    arr = as_coefficients(arr)
    # remaining[k] = norm of c[k:], computed from the back to avoid cancellation
    remaining = np.sqrt(np.cumsum(arr[::-1] ** 2)[::-1])
    return np.arctan2(remaining[1:], arr[:-1])


def min_index(c) -> int:
    """Index of the smallest |c_k|; ties go to the smallest index."""
    return int(np.argmin(np.abs(np.asarray(c))))


def z_operator(n: int) -> np.ndarray:
    if n < 2:
        raise InvalidCoefficients(f"dimension must be >= 2, got {n}")
    return np.diag(np.exp(2j * np.pi * np.arange(n) / n))


@dataclass(frozen=True)
class SymmetricFamily:
    """The N symmetric states and their reciprocal (biorthogonal) partners.

    ``states[l]`` and ``reciprocals[k]`` are row vectors over the logical basis.
    """

    coefficients: np.ndarray
    states: np.ndarray
    reciprocals: np.ndarray
    q: float

    @property
    def dim(self) -> int:
        return self.coefficients.size

    def gram(self) -> np.ndarray:
        return self.states.conj() @ self.states.T

    def overlaps(self) -> np.ndarray:
        """Matrix of <recip_k|psi_l>, which should be (N/sqrt(q)) * identity."""
        return self.reciprocals.conj() @ self.states.T


def build_family(c) -> SymmetricFamily:
    arr = as_coefficients(c)
    n = arr.size
    phases = np.exp(2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    states = phases * arr
    q = float(np.sum(np.abs(arr) ** -2.0))
    reciprocals = phases / np.conj(arr) / np.sqrt(q)
    states.flags.writeable = False
    reciprocals.flags.writeable = False
    arr = arr.copy()
    arr.flags.writeable = False
    return SymmetricFamily(arr, states, reciprocals, q)
