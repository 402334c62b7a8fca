"""Lowering of the discrimination protocol to linear-optical elements.

Four stages, for ``N = 2**M`` logical paths:

I    preparation: a HWP/PBS cascade splits an H photon entering path 0 into
     amplitudes ``c_k`` on paths ``k``, all V polarized; phase shifters
     then apply ``Z^l``.
II   conditional evolution: one polarization rotator per path whose
     amplitude exceeds the minimum, realising ``[[A_s, -A_I], [A_I, A_s]]``
     with V as ancilla ``|0>`` and H as ancilla ``|1>``.
III  projection: a PBS per rotated path sends H (inconclusive) onto a
     dedicated monitor path.
IV   detection: a radix-2 beam-splitter butterfly implementing the inverse
     Fourier transform, followed by detectors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionNotPowerOfTwo
from ..povm import failure_operator, inverse_fourier, success_operator
from ..states import (
    angles_from_coefficients,
    as_angles,
    as_coefficients,
    coefficients_from_angles,
    min_index,
)
from .netlist import H, V, Element, OpticalNetlist, Stage, mode
from .simulate import propagate, simulate_elements

_PHASE_EPS = 1e-12


def check_power_of_two(n: int) -> int:
    n = int(n)
    if n < 2 or n & (n - 1):
        raise DimensionNotPowerOfTwo(
            f"optical compilation needs N to be a power of two (2, 4, 8, ...), got N={n}"
        )
    return n.bit_length() - 1


def bit_reverse(i: int, bits: int) -> int:
    return int(format(i, f"0{bits}b")[::-1], 2) if bits else 0


def _wrap(phi: float) -> float:
    return math.remainder(phi, 2 * math.pi)


def compile_preparation(angles, l: int = 0) -> Stage:
    t = as_angles(angles)
    n = t.size + 1
    check_power_of_two(n)
    if not 0 <= l < n:
        raise IndexError(f"state index {l} out of range for N={n}")
    elements = []
    for i, theta in enumerate(t):
        elements.append(Element("HWP", (i,), angle=float(np.pi / 2 - theta)))
        elements.append(Element("PBS", (i, i + 1)))
    # last path still carries H; turn it to V so polarization factorizes
    elements.append(Element("HWP", (n - 1,), angle=float(np.pi / 2)))
    for k in range(n):
        turns = (l * k) % n
        if turns:
            elements.append(Element("PS", (k,), phase=_wrap(2 * np.pi * turns / n)))
    return Stage("I", tuple(elements), {"state": l})


def compile_conditional(angles) -> Stage:
    c = coefficients_from_angles(angles)
    check_power_of_two(c.size)
    return _conditional_from_coefficients(c)


def _conditional_from_coefficients(c) -> Stage:
    ratios = np.diag(success_operator(c))
    m = min_index(c)
    elements = tuple(
        # negative rotation keeps both branch amplitudes positive, as in U
        Element("HWP", (k,), angle=float(-np.arccos(r)))
        for k, r in enumerate(ratios)
        if k != m and r < 1.0 - 1e-15
    )
    return Stage("II", elements, {"min_path": m})


def compile_projection(dim: int, skip_path: int | None = None, first_monitor: int | None = None) -> Stage:
    check_power_of_two(dim)
    skip = dim - 1 if skip_path is None else skip_path
    monitor = dim if first_monitor is None else first_monitor
    elements = []
    monitored = []
    for k in range(dim):
        if k == skip:
            continue
        elements.append(Element("PBS", (k, monitor + len(monitored))))
        monitored.append(k)
    return Stage(
        "III",
        tuple(elements),
        {"monitored": monitored, "monitor_paths": list(range(monitor, monitor + len(monitored)))},
    )


def compile_fourier_inverse(dim: int) -> Stage:
    """Beam-splitter butterfly equal to the N-point inverse DFT.

    Output ``l`` of the transform leaves on path ``output_paths[l]`` (bit
    reversal of ``l``); detectors are placed accordingly.
    """
    bits = check_power_of_two(dim)
    pos_to_path = [bit_reverse(i, bits) for i in range(dim)]
    pending = [0.0] * dim
    elements = []
    mirror = 0

    def flush(p):
        phi = _wrap(pending[p])
        if abs(phi) > _PHASE_EPS:
            elements.append(Element("PS", (p,), phase=phi))
        pending[p] = 0.0

    for s in range(1, bits + 1):
        m = 1 << s
        half = m >> 1
        for start in range(0, dim, m):
            for j in range(half):
                a = pos_to_path[start + j]
                b = pos_to_path[start + j + half]
                twiddle = np.exp(-2j * np.pi * j / m)
                # BS gives (a + i b, i a + b)/sqrt2; pre-phase b by -i*w and
                # post-phase b by -i to get the (a + w b, a - w b)/sqrt2 butterfly
                pending[b] += float(np.angle(-1j * twiddle))
                flush(a)
                flush(b)
                elements.append(Element("BS", (a, b)))
                pending[b] -= np.pi / 2
        if s < bits:
            for p in range(dim):
                mirror += 1
                elements.append(Element("MIRROR", (p,), label=f"M{mirror}"))
    for p in range(dim):
        flush(p)
    output_paths = [pos_to_path[l] for l in range(dim)]
    return Stage("IV", tuple(elements), {"output_paths": output_paths})


def fourier_stage_unitary(stage: Stage, dim: int) -> np.ndarray:
    """N x N path map of a butterfly stage with rows in logical output order."""
    u = simulate_elements(stage.elements, dim)
    rows = [mode(p, V) for p in stage.metadata["output_paths"]]
    cols = [mode(p, V) for p in range(dim)]
    return u[np.ix_(rows, cols)]


def compile_full(angles, l: int = 0) -> OpticalNetlist:
    c = coefficients_from_angles(angles)
    return _compile(c, l)


def compile_from_coefficients(c, l: int = 0) -> OpticalNetlist:
    return _compile(as_coefficients(c, positive=True), l)


def _compile(c, l: int) -> OpticalNetlist:
    n = c.size
    check_power_of_two(n)
    prep = compile_preparation(angles_from_coefficients(c), l)
    cond = _conditional_from_coefficients(c)
    proj = compile_projection(n, skip_path=cond.metadata["min_path"], first_monitor=n)
    fourier = compile_fourier_inverse(n)
    detectors = [
        Element("DETECTOR", (p,), label=f"D{k}")
        for k, p in enumerate(fourier.metadata["output_paths"])
    ]
    detectors += [
        Element("DETECTOR", (p,), label=f"I{k}")
        for k, p in zip(proj.metadata["monitored"], proj.metadata["monitor_paths"])
    ]
    detection = Stage("IV", fourier.elements + tuple(detectors), fourier.metadata)
    metadata = {
        "state": l,
        "min_path": cond.metadata["min_path"],
        "monitored": proj.metadata["monitored"],
        "monitor_paths": proj.metadata["monitor_paths"],
        "output_paths": fourier.metadata["output_paths"],
    }
    return OpticalNetlist(n, 2 * n - 1, (prep, cond, proj, detection), metadata)


@dataclass(frozen=True)
class ComponentCount:
    hwp: int = 0
    pbs: int = 0
    bs: int = 0
    ps: int = 0
    mirrors: int = 0

    @property
    def table_triple(self):
        return (self.hwp, self.pbs, self.bs)

    @property
    def total(self) -> int:
        return self.hwp + self.pbs + self.bs


def count_components(netlist) -> ComponentCount:
    """Tally elements of a netlist, a stage, or a plain element sequence."""
    if isinstance(netlist, OpticalNetlist):
        elements = netlist.elements()
    elif isinstance(netlist, Stage):
        elements = netlist.elements
    else:
        elements = list(netlist)
    kinds = [el.kind for el in elements]
    return ComponentCount(
        hwp=kinds.count("HWP"),
        pbs=kinds.count("PBS"),
        bs=kinds.count("BS"),
        ps=kinds.count("PS"),
        mirrors=kinds.count("MIRROR"),
    )


def default_coefficients(n: int) -> np.ndarray:
    """Strictly decreasing amplitudes with a unique minimum on the last path."""
    w = 1.0 + (n - 1 - np.arange(n)) / n
    return w / np.linalg.norm(w)


# -- end-to-end maps -------------------------------------------------------


def abstract_measurement_map(c) -> np.ndarray:
    """Amplitudes from logical input ``|k>|0>_a`` to every detector.

    Rows are the conclusive outputs (inverse Fourier of the ``A_s`` branch)
    followed by the ``A_I`` branch of each non-minimal path in ascending order;
    columns are logical inputs.
    """
    arr = as_coefficients(c, positive=True)
    n = arr.size
    m = min_index(arr)
    keep = [k for k in range(n) if k != m]
    return np.vstack([inverse_fourier(n) @ success_operator(arr), failure_operator(arr)[keep]])


def netlist_measurement_map(netlist: OpticalNetlist) -> np.ndarray:
    """Same map as :func:`abstract_measurement_map`, read from stages II-IV."""
    n = netlist.dim
    elements = [el for s in netlist.stages if s.label != "I" for el in s.elements]
    u = simulate_elements(elements, netlist.n_paths)
    meta = netlist.metadata
    rows = [mode(p, V) for p in meta["output_paths"]] + [mode(p, H) for p in meta["monitor_paths"]]
    cols = [mode(k, V) for k in range(n)]
    return u[np.ix_(rows, cols)]


def detector_order(netlist: OpticalNetlist):
    """Detector labels: conclusive ``D0..D{N-1}`` then inconclusive monitors."""
    dets = netlist.detectors()
    conclusive = [f"D{k}" for k in range(netlist.dim)]
    monitors = sorted((lab for lab in dets if lab not in conclusive), key=lambda s: int(s[1:]))
    return conclusive + monitors


def detector_probabilities(netlist: OpticalNetlist, out_states) -> np.ndarray:
    """Click probabilities per detector for rows of output states."""
    out = np.atleast_2d(out_states)
    dets = netlist.detectors()
    power = np.abs(out) ** 2
    return np.stack(
        [power[:, 2 * dets[lab]] + power[:, 2 * dets[lab] + 1] for lab in detector_order(netlist)],
        axis=1,
    )


def input_state(netlist: OpticalNetlist, batch: int = 1) -> np.ndarray:
    psi = np.zeros((batch, netlist.n_modes), dtype=complex)
    psi[:, mode(0, H)] = 1.0
    return psi


def click_probabilities(netlist: OpticalNetlist, **kwargs) -> np.ndarray:
    """Detector distribution for a single H photon entering path 0."""
    psi = propagate(input_state(netlist), netlist.elements(), **kwargs)
    return detector_probabilities(netlist, psi)[0]
