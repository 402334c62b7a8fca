"""Single-photon simulation of netlists and gauge-fixed comparison.

State vectors are propagated as rows of a ``(batch, n_modes)`` array so the
same code builds a full unitary (batch = identity basis) and pushes many Monte
Carlo trials at once.
"""
from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, MalformedNetlist
from .netlist import H, V, OpticalNetlist, mode

_BS = np.array([[1.0, 1j], [1j, 1.0]]) / np.sqrt(2.0)


def hwp_matrix(angle: float) -> np.ndarray:
    """Polarization rotator on (H, V): H -> cos a H + sin a V."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def pbs_blocks(extinction: float = np.inf):
    """2x2 couplings of a PBS on (path a, path b) for H and for V.

    Ideally H crosses between the two paths and V stays.  With a finite
    extinction ratio a power fraction ``1/extinction`` of each polarization
    leaks into the wrong output.
    """
    eps = 0.0 if np.isinf(extinction) else 1.0 / np.sqrt(extinction)
    t = np.sqrt(1.0 - eps**2)
    h_block = np.array([[1j * eps, t], [t, 1j * eps]])
    v_block = np.array([[t, 1j * eps], [1j * eps, t]])
    return h_block, v_block


def bs_matrix() -> np.ndarray:
    return _BS.copy()


def count_arms(elements) -> int:
    return 2 * sum(1 for el in elements if el.kind == "BS")


def _apply2(psi, i, j, m):
    a, b = psi[:, i].copy(), psi[:, j]
    psi[:, i] = m[0, 0] * a + m[0, 1] * b
    psi[:, j] = m[1, 0] * a + m[1, 1] * b


def propagate(psi, elements, *, extinction: float = np.inf, arm_phases=None):
    """Push row state vectors through ``elements`` in order, in place.

    ``arm_phases`` has shape ``(batch, count_arms(elements))``; column ``2m``
    and ``2m + 1`` are extra phases on the two input paths of the m-th beam
    splitter, applied just before it.
    """
    n_modes = psi.shape[1]
    h_block, v_block = pbs_blocks(extinction)
    arm = 0
    for el in elements:
        if any(2 * p + 1 >= n_modes for p in el.paths):
            raise MalformedNetlist(f"{el.kind} on path {el.paths} exceeds {n_modes} modes")
        kind = el.kind
        if kind == "HWP":
            p = el.paths[0]
            _apply2(psi, mode(p, H), mode(p, V), hwp_matrix(el.angle))
        elif kind == "PBS":
            a, b = el.paths
            _apply2(psi, mode(a, H), mode(b, H), h_block)
            _apply2(psi, mode(a, V), mode(b, V), v_block)
        elif kind == "PS":
            p = el.paths[0]
            psi[:, 2 * p : 2 * p + 2] *= np.exp(1j * el.phase)
        elif kind == "BS":
            a, b = el.paths
            if arm_phases is not None:
                psi[:, 2 * a : 2 * a + 2] *= np.exp(1j * arm_phases[:, arm])[:, None]
                psi[:, 2 * b : 2 * b + 2] *= np.exp(1j * arm_phases[:, arm + 1])[:, None]
            arm += 2
            for pol in (H, V):
                _apply2(psi, mode(a, pol), mode(b, pol), _BS)
        # MIRROR and DETECTOR are identity on the mode space
    return psi


def simulate_elements(elements, n_paths: int, **kwargs) -> np.ndarray:
    """Unitary over ``2 * n_paths`` modes; column j is the image of mode j."""
    psi = np.eye(2 * n_paths, dtype=complex)
    arm_phases = kwargs.get("arm_phases")
    if arm_phases is not None:
        kwargs["arm_phases"] = np.broadcast_to(
            np.asarray(arm_phases, dtype=float), (2 * n_paths, count_arms(elements))
        )
    return propagate(psi, elements, **kwargs).T


def simulate_netlist(netlist: OpticalNetlist, **kwargs) -> np.ndarray:
    return simulate_elements(netlist.elements(), netlist.n_paths, **kwargs)


def unitarity_residual(u: np.ndarray) -> float:
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[1]), 2))


def to_ancilla_major(u_paths: np.ndarray, dim: int) -> np.ndarray:
    """Reorder a map on the first ``dim`` paths into system (x) ancilla layout.

    Ancilla ``|0>_a`` is V, ``|1>_a`` is H; the result is indexed
    ``a * dim + k``.
    """
    order = [mode(k, V) for k in range(dim)] + [mode(k, H) for k in range(dim)]
    return u_paths[np.ix_(order, order)]


def fit_gauge(a, b, *, iterations: int = 200):
    """Best diagonal phases with ``diag(d_out) @ a @ diag(d_in) ~ b``.

    Phases are seeded along a spanning forest of the significant entries,
    which is exact whenever the two matrices differ by a gauge only, then
    refined by alternating least squares.  Returns
    ``(residual, d_out, d_in)`` with a Frobenius residual.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2:
        raise DimensionMismatch(f"cannot compare shapes {a.shape} and {b.shape}")
    rows, cols = a.shape
    d_out = np.ones(rows, dtype=complex)
    d_in = np.ones(cols, dtype=complex)
    weight = np.abs(a) * np.abs(b)
    thresh = 1e-9 * max(weight.max(initial=0.0), 1e-300)
    seen_r = np.zeros(rows, bool)
    seen_c = np.zeros(cols, bool)
    for start in np.argsort(-weight.max(axis=1, initial=0.0)):
        if seen_r[start]:
            continue
        seen_r[start] = True
        queue = [("r", start)]
        while queue:
            side, idx = queue.pop()
            if side == "r":
                for j in np.nonzero((weight[idx] > thresh) & ~seen_c)[0]:
                    d_in[j] = _phase(b[idx, j] / (d_out[idx] * a[idx, j]))
                    seen_c[j] = True
                    queue.append(("c", j))
            else:
                for i in np.nonzero((weight[:, idx] > thresh) & ~seen_r)[0]:
                    d_out[i] = _phase(b[i, idx] / (a[i, idx] * d_in[idx]))
                    seen_r[i] = True
                    queue.append(("r", i))

    def resid():
        return float(np.linalg.norm(d_out[:, None] * a * d_in[None, :] - b))

    best = resid()
    for _ in range(iterations):
        if best < 1e-15:
            break
        d_out = _phase_vec(np.sum(b * np.conj(a * d_in[None, :]), axis=1), d_out)
        d_in = _phase_vec(np.sum(b * np.conj(d_out[:, None] * a), axis=0), d_in)
        r = resid()
        if best - r < 1e-16:
            best = min(best, r)
            break
        best = r
    return best, d_out, d_in


def _phase(z: complex) -> complex:
    return z / abs(z) if abs(z) > 0 else 1.0


def _phase_vec(z, fallback):
    mag = np.abs(z)
    out = fallback.copy()
    ok = mag > 1e-300
    out[ok] = z[ok] / mag[ok]
    return out


def verify_equivalence(netlist_map, abstract_map) -> float:
    """Gauge-fixed residual; maps agree when it is below ``1e-8``."""
    return fit_gauge(netlist_map, abstract_map)[0]
