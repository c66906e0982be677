"""Seeded random instances for checking CODA invariants at scale."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analysis
from .dynamics import SimulationTrace, StopCriteria, run
from .graph import Graph, random_strongly_connected
from .scenarios import CheckResult, draw_opinions, check_clusters, check_equilibria

# tight enough that opinions heading to 0 or 1 end within 1e-6 of it
FUZZ_STOP = StopCriteria(max_steps=5_000_000, tol_p=5e-13)


def fuzz_instance(seed: int, max_n: int = 30, min_n: int = 4) -> tuple[Graph, np.ndarray]:
    rng = np.random.default_rng(seed)
    n = int(rng.integers(min_n, max_n + 1))
    directed = bool(rng.integers(2))
    g = random_strongly_connected(n, rng, directed=directed, extra=float(rng.uniform(0.0, 0.3)))
    return g, draw_opinions(rng, n, 1.0)


@dataclass
class FuzzOutcome:
    seed: int
    trace: SimulationTrace
    checks: list[CheckResult]

    @property
    def audit(self) -> dict[str, int]:
        return self.trace.audit

    @property
    def failures(self) -> list[str]:
        out = [f"{k}={v}" for k, v in self.audit.items() if k.endswith("violations") and v]
        out += [f"{c.name}: {c.detail}" for c in self.checks if c.failed]
        return out

    @property
    def ok(self) -> bool:
        return not self.failures


def fuzz_run(seed: int, max_n: int = 30, stop: StopCriteria = FUZZ_STOP) -> FuzzOutcome:
    """One audited CODA run: step ordering and step law at every step, limits in S on
    convergence, and initial robust clusters never switching."""
    g, p0 = fuzz_instance(seed, max_n)
    trace = run(g, p0, "coda", stop, stride=stop.max_steps, audit=True)
    report = analysis.cluster_report(g, trace.q[0])
    return FuzzOutcome(seed, trace, [check_equilibria(trace), check_clusters(trace, report)])
