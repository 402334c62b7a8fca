"""Monte Carlo model of the heralded single-photon experiment.

Each trial prepares one state ``l`` (drawn from the source distribution),
propagates one photon through the compiled netlist and records which detector
fired.  Imperfections:

* PBS extinction: every PBS leaks a power fraction ``1/extinction`` of each
  polarization into the wrong output.
* Phase noise: each beam-splitter input arm of the Fourier interferometer
  picks up an independent Gaussian phase per trial.
* Heralding and detector efficiency: Bernoulli thinning that discards the
  trial; there are no dark counts.

Trials are processed in fixed blocks, each with its own counter-based Philox
stream keyed by ``(seed, block index)``.  Results therefore do not depend on
how blocks are spread over workers.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from .errors import EmptyRecords, InvalidConfig
from .optics.compiler import compile_full, detector_probabilities, input_state
from .optics.netlist import OpticalNetlist
from .optics.simulate import count_arms, propagate, simulate_netlist
from .povm import apply_protocol, optimal_probability
from .states import coefficients_from_angles

BLOCK_SIZE = 1 << 16
PROB_FLOOR = 1e-14
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SimConfig:
    trials: int
    seed: int = 0
    source: tuple | None = None
    pbs_extinction: float = float("inf")
    phase_noise_sigma: float = 0.0
    detector_efficiency: float = 1.0
    heralding_efficiency: float = 1.0

    def __post_init__(self):
        if isinstance(self.trials, bool) or int(self.trials) != self.trials or self.trials < 1:
            raise InvalidConfig(f"trials must be a positive integer, got {self.trials!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidConfig(f"seed must fit in 64 unsigned bits, got {self.seed!r}")
        if not self.pbs_extinction >= 1.0:
            raise InvalidConfig(f"pbs_extinction must be >= 1, got {self.pbs_extinction!r}")
        if not (np.isfinite(self.phase_noise_sigma) and self.phase_noise_sigma >= 0.0):
            raise InvalidConfig(f"phase_noise_sigma must be >= 0, got {self.phase_noise_sigma!r}")
        for name in ("detector_efficiency", "heralding_efficiency"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise InvalidConfig(f"{name} must be in (0, 1], got {value!r}")
        if self.source is not None:
            src = np.asarray(self.source, dtype=float)
            if src.ndim != 1 or np.any(src < 0) or abs(src.sum() - 1.0) > 1e-9:
                raise InvalidConfig("source must be a probability vector over state indices")

    @property
    def ideal(self) -> bool:
        return np.isinf(self.pbs_extinction) and self.phase_noise_sigma == 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["source"] = None if self.source is None else [float(x) for x in self.source]
        d["pbs_extinction"] = _json_float(self.pbs_extinction)
        return d


def _json_float(x: float):
    return "inf" if np.isinf(x) else float(x)


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(block,))))


def imperfect_netlist(netlist: OpticalNetlist, config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """One trial's perturbed mode unitary.

    Draws one standard normal per interferometer arm, scaled by the
    configured phase-noise sigma, and applies the configured PBS leakage.
    """
    n_arms = count_arms(netlist.elements())
    phases = config.phase_noise_sigma * rng.standard_normal(n_arms)
    return simulate_netlist(netlist, extinction=config.pbs_extinction, arm_phases=phases)


@dataclass
class TrialRecords:
    """Per-trial outcomes.

    ``outcome`` is the conclusive detector index ``0..N-1``, ``N`` for an
    inconclusive (monitor) click, or ``-1`` when the trial was discarded.
    """

    dim: int
    trial: np.ndarray
    prepared: np.ndarray
    outcome: np.ndarray

    @classmethod
    def concatenate(cls, parts):
        parts = list(parts)
        if not parts:
            raise EmptyRecords("no records to merge")
        return cls(
            parts[0].dim,
            np.concatenate([p.trial for p in parts]),
            np.concatenate([p.prepared for p in parts]),
            np.concatenate([p.outcome for p in parts]),
        )

    def __len__(self):
        return self.trial.size


@dataclass
class SimReport:
    dim: int
    trials: int
    per_index_trials: list
    conclusive_count: int
    inconclusive_count: int
    discarded_count: int
    confusion_matrix: list
    inconclusive_by_index: list
    discarded_by_index: list
    correct_count: int
    error_count: int
    registered: int
    conclusive_rate: float
    conclusive_rate_ci: tuple
    click_rate: float
    error_rate: float
    analytic_p_d: float | None = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conclusive_rate_ci"] = list(self.conclusive_rate_ci)
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["prepared"] + [f"D{k}" for k in range(self.dim)] + ["inconclusive", "discarded", "trials"])
        for l, row in enumerate(self.confusion_matrix):
            writer.writerow(
                [l, *row, self.inconclusive_by_index[l], self.discarded_by_index[l], self.per_index_trials[l]]
            )
        return buf.getvalue()


def wilson_interval(successes: int, n: int):
    if n == 0:
        return (0.0, 1.0)
    ci = binomtest(int(successes), int(n)).proportion_ci(confidence_level=0.95, method="wilson")
    return (float(ci.low), float(ci.high))


def summarize(records: TrialRecords, *, analytic_p_d: float | None = None, config: dict | None = None) -> SimReport:
    """Aggregate trial records into a report.

    Only integer tallies are involved, so the result does not depend on the
    order or partitioning of the records.
    """
    if records is None or len(records) == 0:
        raise EmptyRecords("cannot summarize an empty record set")
    n = records.dim
    prepared = records.prepared.astype(np.int64)
    outcome = records.outcome.astype(np.int64)
    per_index = np.bincount(prepared, minlength=n)
    # outcome shifted by one so that discarded (-1) lands in column 0
    table = np.zeros((n, n + 2), dtype=np.int64)
    np.add.at(table, (prepared, outcome + 1), 1)
    discarded_by_l = table[:, 0]
    confusion = table[:, 1 : n + 1]
    inconclusive_by_l = table[:, n + 1]
    conclusive = int(confusion.sum())
    correct = int(np.trace(confusion))
    discarded = int(discarded_by_l.sum())
    registered = int(len(records) - discarded)
    denom = max(registered, 1)
    return SimReport(
        dim=n,
        trials=int(len(records)),
        per_index_trials=per_index.tolist(),
        conclusive_count=conclusive,
        inconclusive_count=int(inconclusive_by_l.sum()),
        discarded_count=discarded,
        confusion_matrix=confusion.tolist(),
        inconclusive_by_index=inconclusive_by_l.tolist(),
        discarded_by_index=discarded_by_l.tolist(),
        correct_count=correct,
        error_count=conclusive - correct,
        registered=registered,
        conclusive_rate=correct / denom if registered else 0.0,
        conclusive_rate_ci=wilson_interval(correct, registered),
        click_rate=conclusive / denom if registered else 0.0,
        error_rate=(conclusive - correct) / denom if registered else 0.0,
        analytic_p_d=analytic_p_d,
        config=dict(config or {}),
    )


class _Experiment:
    def __init__(self, config: SimConfig, angles, backend: str):
        self.config = config
        self.coefficients = coefficients_from_angles(angles)
        self.dim = n = self.coefficients.size
        if config.source is not None and len(config.source) != n:
            raise InvalidConfig(f"source has {len(config.source)} entries, expected {n}")
        src = np.full(n, 1.0 / n) if config.source is None else np.asarray(config.source, float)
        self.source_cdf = np.cumsum(src / src.sum())
        if backend == "netlist":
            self.netlists = [compile_full(angles, l) for l in range(n)]
            self.n_arms = count_arms(self.netlists[0].elements())
            self.n_conclusive = n
            self.static = None
            if config.phase_noise_sigma == 0.0:
                self.static = np.stack([self._netlist_probs(l, None) for l in range(n)])
        elif backend == "abstract":
            if not config.ideal:
                raise InvalidConfig("the abstract backend models ideal components only")
            self.n_arms = 0
            rows = []
            for l in range(n):
                out = apply_protocol(self.coefficients, l)
                rows.append(np.append(out.p_conclusive * out.fourier_click_distribution, 1.0 - out.p_conclusive))
            self.static = _categories(np.array(rows), n)
        else:
            raise InvalidConfig(f"unknown backend {backend!r}")

    def _netlist_probs(self, l, phases):
        net = self.netlists[l]
        batch = 1 if phases is None else phases.shape[0]
        psi = propagate(
            input_state(net, batch),
            net.elements(),
            extinction=self.config.pbs_extinction,
            arm_phases=phases,
        )
        probs = detector_probabilities(net, psi)
        out = _categories(probs, self.dim)
        return out[0] if phases is None else out

    def run_block(self, block: int, start: int, count: int) -> TrialRecords:
        cfg = self.config
        rng = block_rng(cfg.seed, block)
        # fixed draw order; noise normals are drawn even when sigma is 0 so
        # every config shares the same uniforms for a given seed
        u_src = rng.random(count)
        u_herald = rng.random(count)
        u_out = rng.random(count)
        u_det = rng.random(count)
        z = rng.standard_normal((count, self.n_arms))
        prepared = np.minimum(np.searchsorted(self.source_cdf, u_src, side="right"), self.dim - 1)
        if self.static is not None:
            probs = self.static[prepared]
        else:
            probs = np.empty((count, self.dim + 1))
            phases = cfg.phase_noise_sigma * z
            for l in range(self.dim):
                idx = np.nonzero(prepared == l)[0]
                if idx.size:
                    probs[idx] = self._netlist_probs(l, phases[idx])
        cdf = np.cumsum(probs, axis=1)
        outcome = np.sum(u_out[:, None] >= cdf[:, :-1], axis=1)
        lost = (u_herald >= cfg.heralding_efficiency) | (u_det >= cfg.detector_efficiency)
        outcome = np.where(lost, -1, outcome)
        return TrialRecords(self.dim, np.arange(start, start + count), prepared, outcome)


def _categories(probs, n):
    """Collapse detector probabilities to N conclusive columns plus one inconclusive."""
    p = np.atleast_2d(probs)
    out = np.concatenate([p[:, :n], p[:, n:].sum(axis=1, keepdims=True)], axis=1)
    out[out < PROB_FLOOR] = 0.0
    return out / out.sum(axis=1, keepdims=True)


def simulate_records(config: SimConfig, angles, *, workers: int = 1, backend: str = "netlist") -> TrialRecords:
    exp = _Experiment(config, angles, backend)
    blocks = [
        (b, start, min(BLOCK_SIZE, config.trials - start))
        for b, start in enumerate(range(0, config.trials, BLOCK_SIZE))
    ]
    if workers <= 1:
        parts = [exp.run_block(*blk) for blk in blocks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda blk: exp.run_block(*blk), blocks))
    return TrialRecords.concatenate(parts)


def run_trials(config: SimConfig, angles, *, workers: int = 1, backend: str = "netlist") -> SimReport:
    """Simulate ``config.trials`` heralded single-photon trials."""
    records = simulate_records(config, angles, workers=workers, backend=backend)
    c = coefficients_from_angles(angles)
    return summarize(records, analytic_p_d=optimal_probability(c), config=config.to_dict())
