"""Monte-Carlo estimation of the top two Lyapunov exponents and the
uniform approximation exponent, plus empirical boundedness monitors."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .algorithms import CASSAIGNE, SELMER, AlgorithmId, burn_in
from .cocycle import (
    inf_norm_flat,
    jacobi_singular_values,
    new_state,
    renorm_iterate,
    wedge2,
)
from .core import DomainError, SimplexPoint, sample_point

DESK_STEPS = 10**8
FULL_STEPS = 2**30


@dataclass(frozen=True)
class EstimatorConfig:
    algorithm: str
    dim: int
    steps: int = DESK_STEPS
    renorm: int = 1024
    orbits: int = 10
    seed: int = 0
    burn_in_cap: int = 10**4

    def __post_init__(self):
        AlgorithmId(self.algorithm, self.dim)  # validates
        if self.orbits < 1:
            raise ValueError("need at least one orbit")
        if self.steps < 1 or self.renorm < 1:
            raise ValueError("steps and renorm must be positive")
        # renormalization happens every `renorm` steps; a trailing
        # partial segment is allowed and the ledger identity still holds

    @property
    def alg(self) -> AlgorithmId:
        return AlgorithmId(self.algorithm, self.dim)


@dataclass
class OrbitEstimate:
    orbit: int
    attempt: int
    lambda1: float
    lambda2: float
    eta_star: float


@dataclass
class EstimatorReport:
    config: EstimatorConfig
    orbits: list
    lambda1: float
    lambda2: float
    eta_star: float
    lambda1_std: float
    lambda2_std: float
    discarded: int
    backend: str
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "estimate",
            "config": asdict(self.config),
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "eta_star": self.eta_star,
            "lambda1_std": self.lambda1_std,
            "lambda2_std": self.lambda2_std,
            "dirichlet": 1.0 + 1.0 / self.config.dim,
            "discarded": self.discarded,
            "backend": self.backend,
            "elapsed_s": self.elapsed_s,
            "per_orbit": [asdict(o) for o in self.orbits],
        }


def _rng_for(seed: int, attempt: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, attempt])))


def _start_point(cfg: EstimatorConfig, attempt: int) -> SimplexPoint:
    alg = cfg.alg
    rng = _rng_for(cfg.seed, attempt)
    x = sample_point(alg.domain, cfg.dim, rng)
    if cfg.algorithm == SELMER:
        x = burn_in(alg, x, cfg.burn_in_cap)
    return x


def _run_attempt(cfg: EstimatorConfig, attempt: int):
    """One full orbit; returns (ok, lambda1, lambda2)."""
    alg = cfg.alg
    x = _start_point(cfg, attempt)
    state = new_state(alg, x, cfg.renorm)
    state, info = renorm_iterate(state, cfg.steps)
    if info["status"] != _backend.OK or info["steps_done"] != cfg.steps:
        return False, 0.0, 0.0
    n = cfg.steps
    return True, state.log_norm_a() / n, state.log_norm_d() / n


def estimate(cfg: EstimatorConfig, tasks: int = 1) -> EstimatorReport:
    """Run independent orbits and pool the per-orbit slopes.

    Degenerate orbits (the map hit a termination set, or floats left the
    representable range) are discarded and resampled deterministically;
    the report counts them.  Results are independent of `tasks`.
    """
    t0 = time.monotonic()
    results: list = []
    discarded = 0
    attempt = 0
    max_attempts = cfg.orbits * 3
    pool = ProcessPoolExecutor(max_workers=tasks) if tasks > 1 else None
    try:
        while len(results) < cfg.orbits:
            want = cfg.orbits - len(results)
            batch = list(range(attempt, min(attempt + want, max_attempts)))
            if not batch:
                raise DomainError(
                    f"all orbits discarded after {max_attempts} attempts"
                )
            attempt = batch[-1] + 1
            if pool is not None:
                outs = list(pool.map(_run_attempt, [cfg] * len(batch), batch))
            else:
                outs = [_run_attempt(cfg, a) for a in batch]
            for a, (ok, l1, l2) in zip(batch, outs):
                if ok:
                    results.append((a, l1, l2))
                else:
                    discarded += 1
    finally:
        if pool is not None:
            pool.shutdown()

    orbits = []
    for i, (a, l1, l2) in enumerate(results):
        orbits.append(OrbitEstimate(i, a, l1, l2, 1.0 - l2 / l1))
    l1s = [o.lambda1 for o in orbits]
    l2s = [o.lambda2 for o in orbits]
    l1 = _mean(l1s)
    l2 = _mean(l2s)
    report = EstimatorReport(
        config=cfg,
        orbits=orbits,
        lambda1=l1,
        lambda2=l2,
        eta_star=1.0 - l2 / l1,
        lambda1_std=_std(l1s),
        lambda2_std=_std(l2s),
        discarded=discarded,
        backend=_backend.backend_name(),
        elapsed_s=_elapsed(t0),
    )
    if not (report.lambda1 > report.lambda2) or not report.lambda1 > 0:
        raise DomainError("estimate violated lambda1 > max(lambda2, 0); inspect the run")
    return report


def _mean(v):
    return sum(v) / len(v)


def _std(v):
    if len(v) < 2:
        return 0.0
    m = _mean(v)
    return math.sqrt(sum((x - m) ** 2 for x in v) / (len(v) - 1))


def _elapsed(t0: float) -> float:
    if os.environ.get("MCF_NO_TIMING"):
        return 0.0
    return time.monotonic() - t0


# ---------------------------------------------------------------------------
# tables

TABLE_GRIDS = {
    1: [(SELMER, d) for d in range(2, 6)],
    2: [("brun", d) for d in range(2, 12)],
    3: [("jacobi_perron", d) for d in range(2, 12)],
    4: [("intermediate", d) for d in range(2, 12)],
    5: [("garrity", d) for d in range(2, 12)],
}


def table(table_id: int, budget: int = 10**7, orbits: int = 3, seed: int = 0,
          renorm: int = 256, tasks: int = 1) -> dict:
    """Estimate a whole table grid; table 6 is the synopsis of the
    uniform approximation exponent for all five simplex algorithms."""
    if budget < 10**7:
        raise ValueError("table budget must be at least 1e7 steps")
    if table_id == 6:
        algs = [SELMER, "brun", "jacobi_perron", "intermediate", "garrity"]
        rows = []
        for d in range(2, 12):
            row = {"d": d}
            for a in algs:
                rep = _table_cell(a, d, budget, orbits, seed, renorm, tasks)
                row[a] = rep.eta_star
            row["dirichlet"] = 1.0 + 1.0 / d
            rows.append(row)
        return {"schema": 1, "kind": "table", "table": 6, "rows": rows}
    grid = TABLE_GRIDS[table_id]
    rows = []
    for a, d in grid:
        rep = _table_cell(a, d, budget, orbits, seed, renorm, tasks)
        rows.append(
            {
                "algorithm": a,
                "d": d,
                "lambda1": rep.lambda1,
                "lambda2": rep.lambda2,
                "eta_star": rep.eta_star,
                "lambda2_std": rep.lambda2_std,
                "dirichlet": 1.0 + 1.0 / d,
            }
        )
    return {"schema": 1, "kind": "table", "table": table_id, "rows": rows}


def _table_cell(a, d, budget, orbits, seed, renorm, tasks):
    cfg = EstimatorConfig(a, d, steps=budget, renorm=renorm, orbits=orbits, seed=seed)
    return estimate(cfg, tasks=tasks)


# ---------------------------------------------------------------------------
# monitors


@dataclass
class WedgeReport:
    algorithm: str
    dim: int
    steps: int
    seed: int
    max_wedge_ratio_log: float
    max_log_dnorm: float
    max_log_dentry: float
    balancedness_min: float
    balancedness_max: float
    checkpoints: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"schema": 1, "kind": "wedge", **asdict(self)}


def _checkpoint_schedule(steps: int) -> list:
    ns = []
    n = 1
    while n < steps:
        ns.append(n)
        n *= 2
    ns.append(steps)
    return ns


def wedge_monitor(algorithm: str, dim: int, steps: int, seed: int = 0,
                  renorm: int = 1024) -> WedgeReport:
    """Track the exterior-square ratio, the difference-cocycle norm, and
    row balancedness along one orbit, at power-of-two checkpoints."""
    cfg = EstimatorConfig(algorithm, dim, steps=max(steps, 1), renorm=renorm,
                          orbits=1, seed=seed)
    alg = cfg.alg
    x = _start_point(cfg, 0)
    state = new_state(alg, x, renorm)
    na = dim + 1
    max_ratio = -math.inf
    max_dnorm = -math.inf
    max_dentry = -math.inf
    bal_min = math.inf
    bal_max = -math.inf
    checkpoints = []
    for n in _checkpoint_schedule(steps):
        state, info = renorm_iterate(state, n - state.n, monitor=True)
        if info["status"] != _backend.OK:
            break
        max_dnorm = max(max_dnorm, info["max_log_dnorm"])
        max_dentry = max(max_dentry, info["max_log_dentry"])
        wa = [state.wa[i * na + j] for i in range(na) for j in range(na)]
        rows = [[wa[i * na + j] for j in range(na)] for i in range(na)]
        w2 = wedge2(rows)
        nw2 = max(sum(abs(v) for v in r) for r in w2)
        nwa = inf_norm_flat(state.wa, na, na)
        ratio_log = state.ledger_a + math.log(nw2) - math.log(nwa)
        max_ratio = max(max_ratio, ratio_log)
        row_sums = [sum(abs(v) for v in r) for r in rows]
        bal = min(row_sums) / max(row_sums)
        bal_min = min(bal_min, bal)
        bal_max = max(bal_max, bal)
        sv = jacobi_singular_values(rows)
        checkpoints.append(
            {
                "n": state.n,
                "wedge_ratio_log": ratio_log,
                "log_dnorm": state.log_norm_d(),
                "delta1_log": state.ledger_a + math.log(sv[0]),
                "delta2_log": state.ledger_a + (math.log(sv[1]) if sv[1] > 0 else -math.inf),
                "balancedness": bal,
            }
        )
    return WedgeReport(
        algorithm=algorithm,
        dim=dim,
        steps=state.n,
        seed=seed,
        max_wedge_ratio_log=max_ratio,
        max_log_dnorm=max_dnorm,
        max_log_dentry=max_dentry,
        balancedness_min=bal_min,
        balancedness_max=bal_max,
        checkpoints=checkpoints,
    )


def balancedness_monitor(algorithm: str, dim: int, steps: int, seed: int = 0,
                         renorm: int = 1024) -> dict:
    """Min/max over checkpoints of (smallest row norm) / (matrix norm)."""
    rep = wedge_monitor(algorithm, dim, steps, seed, renorm)
    return {
        "schema": 1,
        "kind": "balancedness",
        "algorithm": algorithm,
        "dim": dim,
        "steps": rep.steps,
        "seed": seed,
        "min": rep.balancedness_min,
        "max": rep.balancedness_max,
    }


def conjugacy_check(steps: int, seed: int = 0, orbits: int = 4,
                    renorm: int = 256, tasks: int = 1) -> dict:
    """Compare the Lyapunov spectra of the sorted d=2 algorithm and its
    unsorted triangle conjugate; they agree in the limit."""
    a = estimate(EstimatorConfig(SELMER, 2, steps=steps, renorm=renorm,
                                 orbits=orbits, seed=seed), tasks=tasks)
    b = estimate(EstimatorConfig(CASSAIGNE, 2, steps=steps, renorm=renorm,
                                 orbits=orbits, seed=seed), tasks=tasks)
    return {
        "schema": 1,
        "kind": "conjugacy",
        "steps": steps,
        "seed": seed,
        "selmer": a.to_dict(),
        "cassaigne": b.to_dict(),
        "delta_lambda1": abs(a.lambda1 - b.lambda1),
        "delta_lambda2": abs(a.lambda2 - b.lambda2),
    }
