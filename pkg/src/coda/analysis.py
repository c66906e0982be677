"""Predictions computed from topology and initial actions alone.

Equilibrium sets, robust polarized clusters, diffusion layers, the one-step
flip threshold, the complete-graph oscillation band and the ring orbit
amplitude.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
from scipy.optimize import bisect

from .graph import Graph


@dataclass(frozen=True)
class EquilibriumSet:
    """Sorted reduced fractions k/m with 0 <= k <= m <= n-1, m >= 1."""

    n: int
    values: tuple[Fraction, ...]

    def __contains__(self, x) -> bool:
        return Fraction(x) in self.values

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def as_floats(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    def distance(self, x) -> np.ndarray:
        """Distance from each x to the nearest member."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.min(np.abs(x[:, None] - self.as_floats()[None, :]), axis=1)

    def contains_approx(self, x, tol: float = 1e-6) -> np.ndarray:
        return self.distance(x) <= tol


def _fractions(denominators: Iterable[int]) -> tuple[Fraction, ...]:
    vals = {Fraction(k, m) for m in denominators if m >= 1 for k in range(m + 1)}
    return tuple(sorted(vals))


def equilibrium_set(n: int) -> EquilibriumSet:
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    return EquilibriumSet(n, _fractions(range(1, n)))


def effective_equilibrium_set(g: Graph) -> EquilibriumSet:
    """Only the ratios k/n_i an agent can actually see; e.g. {0, 1/2, 1} on a ring."""
    return EquilibriumSet(g.n, _fractions(set(int(d) for d in g.degrees)))


def _as_set(agents) -> frozenset[int]:
    return frozenset(int(a) for a in agents)


def is_robust_cluster(g: Graph, A, q0) -> bool:
    """Same initial action everywhere in A, and every member has at least as many
    influencers inside A as outside."""
    A = _as_set(A)
    if not A:
        raise ValueError("robust cluster check needs a non-empty agent set")
    if min(A) < 0 or max(A) >= g.n:
        raise ValueError("agent set is not a subset of the graph")
    q0 = np.asarray(q0)
    if len({int(q0[i]) for i in A}) != 1:
        return False
    for i in A:
        inside = sum(1 for j in g.influencers[i] if j in A)
        if inside < len(g.influencers[i]) - inside:
            return False
    return True


def maximal_robust_subset(g: Graph, seed) -> frozenset[int]:
    """Largest subset of ``seed`` whose members all keep at least half their influencers inside.

    Removing an agent can only hurt the others, so pruning violators until none remain
    reaches the unique maximal such subset.
    """
    A = set(_as_set(seed))
    inside = {i: sum(1 for j in g.influencers[i] if j in A) for i in A}
    out: dict[int, list[int]] = {}
    for i in A:
        for j in g.influencers[i]:
            if j in A:
                out.setdefault(j, []).append(i)
    queue = [i for i in A if 2 * inside[i] < len(g.influencers[i])]
    while queue:
        i = queue.pop()
        if i not in A:
            continue
        A.discard(i)
        for t in out.get(i, ()):
            if t in A:
                inside[t] -= 1
                if 2 * inside[t] < len(g.influencers[t]):
                    queue.append(t)
    return frozenset(A)


def components(g: Graph, A) -> list[frozenset[int]]:
    """Weakly connected components of the subgraph induced by A, ordered by smallest member."""
    A = _as_set(A)
    adj: dict[int, set[int]] = {i: set() for i in A}
    for i in A:
        for j in g.influencers[i]:
            if j in A:
                adj[i].add(j)
                adj[j].add(i)
    seen: set[int] = set()
    comps = []
    for start in sorted(A):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        comps.append(frozenset(comp))
    return comps


@dataclass(frozen=True)
class Cluster:
    agents: frozenset[int]
    action: int


def find_maximal_robust_clusters(g: Graph, q0) -> list[Cluster]:
    """Per action, prune the agents playing it to their maximal robust subset and split
    that into connected pieces, each itself a robust polarized cluster."""
    q0 = np.asarray(q0)
    clusters = []
    for a in (0, 1):
        core = maximal_robust_subset(g, np.flatnonzero(q0 == a))
        clusters += [Cluster(c, a) for c in components(g, core)]
    return sorted(clusters, key=lambda c: min(c.agents))


def diffusion_layers(g: Graph, A1, q0) -> list[frozenset[int]]:
    """[A1, A2, ..., Ad]: each next layer is every not-yet-covered agent with a strict
    majority of its influencers in the previous layer."""
    A1 = _as_set(A1)
    if not is_robust_cluster(g, A1, q0):
        raise ValueError("diffusion layers need a robust polarized cluster as the first layer")
    layers = [A1]
    covered = set(A1)
    while True:
        prev = layers[-1]
        nxt = set()
        for i in range(g.n):
            if i in covered or not g.influencers[i]:
                continue
            inside = sum(1 for j in g.influencers[i] if j in prev)
            if inside > len(g.influencers[i]) - inside:
                nxt.add(i)
        if not nxt:
            return layers
        layers.append(frozenset(nxt))
        covered |= nxt


@dataclass
class ClusterReport:
    clusters: list[Cluster]
    layers: dict[int, list[frozenset[int]]]
    n: int
    predictions: list[int | None] = field(default_factory=list)

    @property
    def uncovered(self) -> list[int]:
        return [i for i, a in enumerate(self.predictions) if a is None]

    def to_dict(self) -> dict:
        return {
            "clusters": [
                {"agents": sorted(i + 1 for i in c.agents), "action": c.action} for c in self.clusters
            ],
            "layers": {
                str(a): [sorted(i + 1 for i in layer) for layer in chain]
                for a, chain in sorted(self.layers.items())
            },
            "predictions": {str(i + 1): a for i, a in enumerate(self.predictions)},
            "uncovered": [i + 1 for i in self.uncovered],
        }


def cluster_report(g: Graph, q0) -> ClusterReport:
    """Maximal robust clusters and, for each action, the layer chain grown from the union of
    its clusters; agents in a chain are predicted to end up playing that action."""
    q0 = np.asarray(q0)
    clusters = find_maximal_robust_clusters(g, q0)
    layers: dict[int, list[frozenset[int]]] = {}
    predictions: list[int | None] = [None] * g.n
    for a in (0, 1):
        core = frozenset().union(*(c.agents for c in clusters if c.action == a))
        if not core:
            continue
        chain = diffusion_layers(g, core, q0)
        layers[a] = chain
        for layer in chain:
            for i in layer:
                if predictions[i] is not None and predictions[i] != a:
                    raise AssertionError(f"agent {i} predicted to play both actions")
                predictions[i] = a
    return ClusterReport(clusters, layers, g.n, predictions)


def _increasing_root(f, lo: float, hi: float, xtol: float) -> float:
    return bisect(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)


def flip_threshold(r: float) -> float:
    """Distance above 1/2 inside which an agent whose influencers play 1 in proportion r < 1/2
    switches to action 0 in one step: the root in (0, 1/2) of
    x^3 + (1/2 - r) x^2 + 3x/4 - (1/2 - r)/4."""
    r = float(r)
    if not (0.0 <= r < 0.5):
        raise ValueError(f"flip threshold needs 0 <= r < 1/2, got {r}")
    a = 0.5 - r
    return _increasing_root(lambda x: ((x + a) * x + 0.75) * x - a / 4, 0.0, 0.5, 1e-12)


def oscillation_band(n: int) -> float:
    """Half-width of the strip around 1/2 in which opinions alternate on a complete graph of
    even size n under symmetric initial opinions."""
    if n < 4 or n % 2:
        raise ValueError(f"oscillation band needs an even n >= 4, got {n}")
    c = 1.0 / (n - 1)
    eps = _increasing_root(lambda x: ((x + c / 2) * x + 0.75) * x - c / 8, 0.0, 0.5, 1e-14)
    if not (c / 8 < eps < c / 6):
        raise AssertionError(f"band {eps} escaped (1/(8(n-1)), 1/(6(n-1)))")
    return eps


def ring_orbit_sigma() -> float:
    """Amplitude of the alternating period-2 ring state: the root in (0, 1/2) of
    1/2 - s = 1/2 + s - (1/2 + s)^2 (1/2 - s), i.e. 8s^3 + 4s^2 + 14s - 1 = 0."""
    return _increasing_root(lambda s: ((8 * s + 4) * s + 14) * s - 1, 0.0, 0.5, 1e-14)


def predict_complete_graph(g: Graph, q0) -> str:
    """'all->0', 'all->1', or 'oscillation-candidate' on an even split."""
    if not g.is_complete():
        raise ValueError("complete-graph prediction needs a complete graph")
    q0 = np.asarray(q0)
    plus = int(np.sum(q0 == 1))
    minus = q0.size - plus
    if minus > plus:
        return "all->0"
    if plus > minus:
        return "all->1"
    return "oscillation-candidate"


def is_symmetric_pairs(p0, tol: float = 0.0) -> bool:
    """p_i = 1/2 - eta_i and p_{n/2+i} = 1/2 + eta_i with eta_i in (0, 1/2)."""
    p0 = np.asarray(p0, dtype=float)
    if p0.size % 2:
        return False
    h = p0.size // 2
    lo, hi = p0[:h], p0[h:]
    return bool(
        np.all(lo < 0.5) and np.all(hi > 0.5) and np.all(np.abs((0.5 - lo) - (hi - 0.5)) <= tol)
    )


def contraction_rate(eps: float, n: int) -> float:
    """Per-step spread factor claimed for COCA when every p_i(0) lies in [eps, 1 - eps]."""
    return 1.0 - min(0.75, eps * (1.0 - eps) / (n - 1))


def coca_weights(g: Graph, p) -> tuple[np.ndarray, np.ndarray]:
    """(a_ij per agent, a_ii per agent) of the COCA update matrix; a_ij = p_i(1-p_i)/n_i
    is shared by every influencer of i. Isolated agents get NaN and a_ii = 1."""
    p = np.asarray(p, dtype=float)
    deg = g.degrees
    with np.errstate(invalid="ignore", divide="ignore"):
        off = np.where(deg > 0, p * (1 - p) / np.maximum(deg, 1), np.nan)
    diag = np.where(deg > 0, 1 - p * (1 - p), 1.0)
    return off, diag
