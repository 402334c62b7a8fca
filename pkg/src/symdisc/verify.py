"""Invariant battery shared by ``symdisc verify`` and the test-suite."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .optics.compiler import (
    abstract_measurement_map,
    check_power_of_two,
    click_probabilities,
    compile_fourier_inverse,
    compile_full,
    count_components,
    default_coefficients,
    fourier_stage_unitary,
    netlist_measurement_map,
)
from .optics.simulate import verify_equivalence
from .povm import (
    apply_protocol,
    build_povm,
    conditional_unitary,
    fourier,
    inverse_fourier,
    optimal_probability,
    verify_completeness,
)
from .states import angles_from_coefficients, build_family, coefficients_from_angles

REFERENCE_COUNTS = {4: (7, 6, 4), 8: (15, 14, 12), 16: (31, 30, 32)}

# inverse 4-point transform written out, rows (1,1,1,1), (1,-i,-1,i), ...
EXPLICIT_F4_INV = 0.5 * np.array(
    [[1, 1, 1, 1], [1, -1j, -1, 1j], [1, -1, 1, -1], [1, 1j, -1, -1j]]
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status}  {self.name:<22} value={self.value:.3e} tol={self.tolerance:.0e}{extra}"


def random_angles(rng: np.random.Generator, n: int, low: float = 0.1, high: float = 1.45) -> np.ndarray:
    """Angles away from the domain edges so no amplitude is vanishingly small."""
    return rng.uniform(low, high, n - 1)


def _check(name, value, tol, detail="") -> CheckResult:
    return CheckResult(name, bool(value < tol), float(value), tol, detail)


def check_optimal_bound(dim, draws, rng) -> CheckResult:
    worst = spread = 0.0
    for _ in range(draws):
        c = coefficients_from_angles(random_angles(rng, dim))
        probs = np.array([apply_protocol(c, l).p_conclusive for l in range(dim)])
        worst = max(worst, float(np.max(np.abs(probs - optimal_probability(c)))))
        spread = max(spread, float(np.ptp(probs)))
    ok = worst < 1e-10 and spread < 1e-12
    return CheckResult("optimal_bound", ok, worst, 1e-10, f"spread={spread:.1e}")


def check_two_state(points: int = 50) -> CheckResult:
    worst = 0.0
    for theta in np.linspace(np.pi / 4 / points, np.pi / 4, points):
        c = coefficients_from_angles([theta])
        fam = build_family(c)
        limit = 1.0 - abs(np.vdot(fam.states[0], fam.states[1]))
        worst = max(worst, abs(apply_protocol(c, 0).p_conclusive - limit))
    return _check("two_state_limit", worst, 1e-12)


def check_completeness(dim, draws, rng) -> CheckResult:
    worst = max(
        verify_completeness(build_povm(coefficients_from_angles(random_angles(rng, dim))))
        for _ in range(draws)
    )
    return _check("completeness", worst, 1e-10)


def check_biorthogonality(dim, draws, rng) -> CheckResult:
    worst = 0.0
    for _ in range(draws):
        fam = build_family(coefficients_from_angles(random_angles(rng, dim)))
        target = dim / np.sqrt(fam.q) * np.eye(dim)
        worst = max(worst, float(np.max(np.abs(fam.overlaps() - target))))
    return _check("biorthogonality", worst, 1e-10)


def check_unitarity(dim, draws, rng) -> CheckResult:
    worst = max(
        conditional_unitary(coefficients_from_angles(random_angles(rng, dim))).unitarity_residual()
        for _ in range(draws)
    )
    return _check("unitarity", worst, 1e-10)


def check_unambiguity(dim, draws, rng) -> CheckResult:
    worst = 0.0
    u = fourier(dim)
    for _ in range(draws):
        c = coefficients_from_angles(random_angles(rng, dim))
        for l in range(dim):
            top = apply_protocol(c, l).output[:dim]
            leak = np.abs(u.conj().T @ top) ** 2
            leak[l] = 0.0
            worst = max(worst, float(leak.max()))
    return _check("unambiguity", worst, 1e-20)


def check_fourier(dim, faults=()) -> CheckResult:
    sizes = sorted({2, 4, 8, 16} | ({dim} if _pow2(dim) else set()))
    worst = float(np.max(np.abs(inverse_fourier(dim) @ fourier(dim) - np.eye(dim))))
    worst = max(worst, float(np.max(np.abs(inverse_fourier(4) - EXPLICIT_F4_INV))))
    for n in sizes:
        u = fourier_stage_unitary(compile_fourier_inverse(n), n)
        if "fourier" in faults:
            u = u.copy()
            u[0, 0] += 1e-3
        worst = max(worst, float(np.max(np.abs(u - inverse_fourier(n)))))
    return _check("fourier", worst, 1e-10, f"butterfly sizes {sizes}")


def check_counts() -> CheckResult:
    bad = []
    for n, expected in REFERENCE_COUNTS.items():
        counts = count_components(compile_full_default(n))
        bs_law = (n // 2) * int(np.log2(n))
        if counts.table_triple != expected or counts.bs != bs_law:
            bad.append(f"N={n}: got {counts.table_triple}, expected {expected}")
    return CheckResult("reference_counts", not bad, float(len(bad)), 0, "; ".join(bad) or "exact")


def compile_full_default(n: int, l: int = 0):
    return compile_full(angles_from_coefficients(default_coefficients(n)), l)


def check_netlist(dim, draws, rng) -> CheckResult:
    resid = prob_err = crosstalk = 0.0
    for _ in range(draws):
        angles = random_angles(rng, dim)
        c = coefficients_from_angles(angles)
        p_d = optimal_probability(c)
        for l in range(dim):
            net = compile_full(angles, l)
            if l == 0:
                resid = max(resid, verify_equivalence(netlist_measurement_map(net), abstract_measurement_map(c)))
            probs = click_probabilities(net)
            prob_err = max(prob_err, abs(probs[l] - p_d), abs(probs.sum() - 1.0))
            others = np.delete(probs[:dim], l)
            crosstalk = max(crosstalk, float(others.max()))
    ok = resid < 1e-8 and prob_err < 1e-10 and crosstalk < 1e-20
    return CheckResult(
        "netlist_equivalence", ok, resid, 1e-8, f"click_err={prob_err:.1e} crosstalk={crosstalk:.1e}"
    )


def _pow2(n: int) -> bool:
    try:
        check_power_of_two(n)
    except ValueError:
        return False
    return True


def run_battery(dim: int = 4, draws: int = 20, seed: int = 0, faults=()) -> list:
    rng = np.random.default_rng(seed)
    results = [
        check_optimal_bound(dim, draws, rng),
        check_two_state(),
        check_completeness(dim, draws, rng),
        check_biorthogonality(dim, draws, rng),
        check_unitarity(dim, draws, rng),
        check_unambiguity(dim, draws, rng),
        check_fourier(dim, faults),
        check_counts(),
    ]
    if _pow2(dim):
        results.append(check_netlist(dim, max(1, min(draws, 20)), rng))
    else:
        results.append(CheckResult("netlist_equivalence", True, 0.0, 1e-8, f"skipped: N={dim} is not a power of two"))
    return results
