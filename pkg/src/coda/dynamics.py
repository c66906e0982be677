"""COCA, CODA and Martins opinion updates, plus a run driver with stop detection."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

from . import _kernels as K
from .graph import Graph

Model = Literal["coca", "coda", "martins"]
MODELS = ("coca", "coda", "martins")
_MODEL_CODES = {"coca": K.COCA, "coda": K.CODA, "martins": K.MARTINS}

VERDICTS = ("converged", "oscillating_period2", "max_steps")
_STOP_NAMES = {K.STOP_CONVERGED: "converged", K.STOP_OSCILLATING: "oscillating_period2"}

_ONE_BELOW = np.nextafter(1.0, 0.0)
_TINY = np.nextafter(0.0, 1.0)


def quantize(p, prev):
    """Action of an opinion: 0 below 1/2, 1 above, and ``prev`` on an exact tie.

    ``prev`` is the action last assigned, which records the side the opinion came from.
    Works elementwise on arrays.
    """
    p = np.asarray(p, dtype=float)
    out = np.where(p < 0.5, 0, np.where(p > 0.5, 1, prev)).astype(np.int8)
    return out if out.ndim else int(out)


@dataclass(frozen=True)
class OpinionState:
    k: int
    p: np.ndarray
    q: np.ndarray

    @classmethod
    def initial(cls, p0) -> "OpinionState":
        p0 = np.array(p0, dtype=float)
        # no k-1 at start: a tie falls to 1, the "otherwise" branch
        return cls(0, p0, quantize(p0, np.int8(1)))

    @property
    def q_prev_basis(self) -> np.ndarray:
        # the tie rule only ever needs the last assigned action
        return self.q

    @property
    def minus(self) -> np.ndarray:
        return np.flatnonzero(self.q == 0)

    @property
    def plus(self) -> np.ndarray:
        return np.flatnonzero(self.q == 1)


def action_counts(g: Graph, q) -> tuple[np.ndarray, np.ndarray]:
    """Per-agent (n_i^-, n_i^+): influencers currently playing 0 and 1."""
    src, dst = g.edge_arrays
    plus = np.bincount(dst, weights=np.asarray(q, dtype=float)[src], minlength=g.n)
    return g.degrees - plus, plus


def influence_ratio(g: Graph, q) -> np.ndarray:
    """r_i = n_i^+ / n_i; NaN for agents without influencers."""
    _, plus = action_counts(g, q)
    deg = g.degrees
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(deg > 0, plus / np.maximum(deg, 1), np.nan)


def coca_step(g: Graph, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    src, dst = g.edge_arrays
    acc = np.bincount(dst, weights=p[src] - p[dst], minlength=g.n)
    deg = g.degrees
    out = p.copy()
    m = deg > 0
    out[m] = p[m] + p[m] * (1.0 - p[m]) / deg[m] * acc[m]
    return out


def coda_step(g: Graph, state: OpinionState) -> OpinionState:
    p = state.p
    _, plus = action_counts(g, state.q)
    deg = g.degrees
    p_new = p.copy()
    m = deg > 0
    r = plus[m] / deg[m]
    p_new[m] = p[m] + p[m] * (1.0 - p[m]) * (r - p[m])
    return OpinionState(state.k + 1, p_new, quantize(p_new, state.q))


def _check_alpha(alpha: float) -> None:
    if not (0.5 <= alpha < 1.0):
        raise ValueError(f"alpha must lie in [1/2, 1), got {alpha}")


def martins_step(g: Graph, p_tilde, q, alpha: float) -> np.ndarray:
    """Bayesian odds update: each influencer multiplies the odds by alpha/(1-alpha) if it plays 1
    and by (1-alpha)/alpha if it plays 0, applied in sorted influencer order.

    Results that would round to 0 or 1 are held at the nearest representable interior value.
    """
    _check_alpha(alpha)
    p_tilde = np.asarray(p_tilde, dtype=float)
    q = np.asarray(q)
    f_up = alpha / (1.0 - alpha)
    f_down = 1.0 / f_up
    out = p_tilde.copy()
    for i, nbrs in enumerate(g.influencers):
        if not nbrs:
            continue
        odds = p_tilde[i] / (1.0 - p_tilde[i])
        for j in nbrs:
            odds = odds * (f_up if q[j] == 1 else f_down)
        v = odds / (1.0 + odds)
        out[i] = min(max(v, _TINY), _ONE_BELOW)
    return out


@dataclass(frozen=True)
class StopCriteria:
    max_steps: int = 100_000
    tol_p: float = 1e-10
    window: int = 10
    osc_window: int = 6

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not self.tol_p > 0:
            raise ValueError("tol_p must be > 0")
        if self.window < 1 or self.osc_window < 1:
            raise ValueError("windows must be >= 1")


@dataclass
class SimulationTrace:
    """Recorded snapshots of a run.

    ``ks[m]`` is the step of snapshot ``m``; with ``stride=1`` every step is kept and
    ``len(ks) == steps + 1``. The last step is always recorded. ``first_flip`` and
    ``last_flip`` give, per agent, the first and last step at which its action changed
    (-1 if never), tracked at full resolution whatever the stride.
    """

    graph: Graph
    model: str
    ks: np.ndarray
    p: np.ndarray
    q: np.ndarray
    verdict: str
    steps: int
    first_flip: np.ndarray
    last_flip: np.ndarray
    alpha: float | None = None
    audit: dict[str, int] = field(default_factory=dict)

    @property
    def final_p(self) -> np.ndarray:
        return self.p[-1]

    @property
    def final_q(self) -> np.ndarray:
        return self.q[-1]

    @property
    def limits(self) -> np.ndarray | None:
        return self.final_p if self.verdict == "converged" else None

    @property
    def band(self) -> float | None:
        """max_i |p_i - 1/2| at the final step, for oscillating runs."""
        if self.verdict != "oscillating_period2":
            return None
        return float(np.max(np.abs(self.final_p - 0.5)))

    def summary(self) -> dict:
        out = {
            "model": self.model,
            "graph": self.graph.name,
            "n": self.graph.n,
            "verdict": self.verdict,
            "steps": self.steps,
            "final_p": [float(x) for x in self.final_p],
            "final_q": [int(x) for x in self.final_q],
            "first_flip": [int(x) for x in self.first_flip],
            "last_flip": [int(x) for x in self.last_flip],
        }
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.band is not None:
            out["band"] = self.band
        if self.audit:
            out["audit"] = dict(self.audit)
        return out


def validate_initial(p0, model: str) -> np.ndarray:
    p0 = np.array(p0, dtype=float)
    if p0.ndim != 1:
        raise ValueError("initial opinions must be a vector")
    bad = np.flatnonzero(~((p0 > 0) & (p0 < 1)))
    if bad.size:
        raise ValueError(f"initial opinions must lie in (0, 1); agent {bad[0] + 1} has {p0[bad[0]]}")
    if model != "coca":
        tie = np.flatnonzero(p0 == 0.5)
        if tie.size:
            raise ValueError(
                f"quantized models need p_i(0) != 1/2; agent {tie[0] + 1} starts at 0.5"
            )
    return p0


def run(
    g: Graph,
    p0,
    model: Model = "coda",
    stop: StopCriteria | None = None,
    *,
    alpha: float | None = None,
    stride: int = 1,
    audit: bool = False,
    audit_tol: float = 1e-12,
) -> SimulationTrace:
    """Iterate ``model`` from ``p0`` until convergence, a period-2 action cycle, or max_steps.

    Converged means max_i |p_i(k+1) - p_i(k)| < tol_p with q unchanged for ``window`` steps;
    oscillating means q(k+2) = q(k) != q(k+1) for ``osc_window`` consecutive steps.
    With ``audit`` (CODA only) every step is checked for the p / p' / r ordering, the
    action-preservation step law and closure in (0, 1); counts land in ``trace.audit``.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    if model == "martins":
        if alpha is None:
            raise ValueError("martins model needs alpha")
        _check_alpha(alpha)
    if stride < 1:
        raise ValueError("stride must be >= 1")
    stop = stop or StopCriteria()
    p = validate_initial(p0, model)
    if p.size != g.n:
        raise ValueError(f"got {p.size} initial opinions for {g.n} agents")

    state = OpinionState.initial(p)
    p = state.p.copy()
    q = state.q.copy()
    q_prev = q.copy()
    indptr, indices = g.csr
    f_up = alpha / (1.0 - alpha) if model == "martins" else 0.0
    counters = np.zeros(2, dtype=np.int64)
    last_dp = np.zeros(1)
    first_flip = np.full(g.n, -1, dtype=np.int64)
    last_flip = np.full(g.n, -1, dtype=np.int64)
    audit_counts = np.zeros(4, dtype=np.int64)

    ks, ps, qs = [0], [p.copy()], [q.copy()]
    k = 0
    have_prev = False
    verdict = "max_steps"
    code = _MODEL_CODES[model]
    while k < stop.max_steps:
        chunk = min(stride, stop.max_steps - k)
        taken, why, have_prev = K.advance(
            code, indptr, indices, f_up, p, q, q_prev, have_prev, chunk, stop.tol_p,
            stop.window, stop.osc_window, counters, last_dp, first_flip, last_flip, k,
            audit, audit_tol, audit_counts,
        )
        k += taken
        ks.append(k)
        ps.append(p.copy())
        qs.append(q.copy())
        if why != K.STOP_NONE:
            verdict = _STOP_NAMES[why]
            break

    audit_info = {}
    if audit and model == "coda":
        audit_info = {
            "trichotomy_violations": int(audit_counts[K.A_TRICHOTOMY]),
            "step_law_violations": int(audit_counts[K.A_STEP_LAW]),
            "closure_violations": int(audit_counts[K.A_CLOSURE]),
            "agent_steps_checked": int(audit_counts[K.A_CHECKED]),
        }
    return SimulationTrace(
        graph=g,
        model=model,
        ks=np.array(ks, dtype=np.int64),
        p=np.array(ps),
        q=np.array(qs, dtype=np.int8),
        verdict=verdict,
        steps=k,
        first_flip=first_flip,
        last_flip=last_flip,
        alpha=alpha,
        audit=audit_info,
    )


def write_trace_csv(trace: SimulationTrace, path: str | Path) -> None:
    """One ``k,agent,p,q`` row per agent per recorded step; agents 1-indexed."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "agent", "p", "q"])
        for k, p, q in zip(trace.ks, trace.p, trace.q):
            for i in range(p.size):
                w.writerow([int(k), i + 1, repr(float(p[i])), int(q[i])])


def read_trace_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_trace_csv`: (ks, p[m, n], q[m, n])."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    ks = np.unique(rows[:, 0]).astype(np.int64)
    n = int(rows[:, 1].max())
    return ks, rows[:, 2].reshape(len(ks), n), rows[:, 3].reshape(len(ks), n).astype(np.int8)


def write_summary_json(trace: SimulationTrace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trace.summary(), indent=2) + "\n")
