"""Fixed interaction graphs.

Agents are 0-indexed in the Python API. The edge-list text format, trace
files, reports and scenario configs use 1-indexed agent labels.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Interaction topology: ``influencers[i]`` is the sorted tuple N_i of agents j with an edge j -> i."""

    n: int
    directed: bool
    influencers: tuple[tuple[int, ...], ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"graph needs at least one agent, got n={self.n}")
        if len(self.influencers) != self.n:
            raise GraphError("influencer table length does not match n")
        for i, nbrs in enumerate(self.influencers):
            if list(nbrs) != sorted(set(nbrs)):
                raise GraphError(f"influencers of agent {i} must be sorted and unique")
            if i in nbrs:
                raise GraphError(f"self-loop on agent {i}")
            if nbrs and (nbrs[0] < 0 or nbrs[-1] >= self.n):
                raise GraphError(f"influencer of agent {i} out of range")
        if not self.directed:
            for i, nbrs in enumerate(self.influencers):
                for j in nbrs:
                    if i not in self.influencers[j]:
                        raise GraphError(f"undirected graph is not symmetric at ({j}, {i})")

    @cached_property
    def degrees(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.influencers], dtype=np.int64)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) so that influencers of i are ``indices[indptr[i]:indptr[i+1]]``."""
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.degrees, out=indptr[1:])
        indices = np.fromiter(
            (j for nbrs in self.influencers for j in nbrs), dtype=np.int64, count=int(indptr[-1])
        )
        return indptr, indices

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(sources, targets) of every directed edge j -> i, targets in CSR order."""
        indptr, indices = self.csr
        targets = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        return indices, targets

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self.influencers[i]

    def edges(self) -> list[tuple[int, int]]:
        """All directed edges (j, i), one per influencer relation."""
        return [(j, i) for i, nbrs in enumerate(self.influencers) for j in nbrs]

    @property
    def edge_count(self) -> int:
        """Directed edges, or undirected edges counted once."""
        total = int(self.degrees.sum())
        return total if self.directed else total // 2

    def is_complete(self) -> bool:
        return all(len(nbrs) == self.n - 1 for nbrs in self.influencers)

    def is_strongly_connected(self) -> bool:
        if self.n == 1:
            return True
        out: list[list[int]] = [[] for _ in range(self.n)]
        for j, i in self.edges():
            out[j].append(i)
        return _reaches_all(out, self.n) and _reaches_all(
            [list(nbrs) for nbrs in self.influencers], self.n
        )


def _reaches_all(adj: Sequence[Sequence[int]], n: int) -> bool:
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(v)
    return bool(seen.all())


def _from_sets(n: int, sets: Sequence[Iterable[int]], directed: bool, name: str) -> Graph:
    return Graph(n, directed, tuple(tuple(sorted(s)) for s in sets), name=name)


def build_complete(n: int) -> Graph:
    if n < 2:
        raise GraphError(f"complete graph needs n >= 2, got {n}")
    return _from_sets(n, [[j for j in range(n) if j != i] for i in range(n)], False, f"complete {n}")


def build_ring(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"ring needs n >= 3, got {n}")
    return _from_sets(n, [{(i - 1) % n, (i + 1) % n} for i in range(n)], False, f"ring {n}")


def lattice_index(row: int, col: int, cols: int) -> int:
    return row * cols + col


def build_lattice(rows: int, cols: int) -> Graph:
    """Non-wrapping square grid with 4-neighbourhoods, agents numbered row by row."""
    if rows < 2 or cols < 2:
        raise GraphError(f"lattice needs rows, cols >= 2, got {rows}x{cols}")
    sets = []
    for r in range(rows):
        for c in range(cols):
            nbrs = []
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols:
                    nbrs.append(lattice_index(rr, cc, cols))
            sets.append(nbrs)
    return _from_sets(rows * cols, sets, False, f"lattice {rows}x{cols}")


def build_from_edges(n: int, edges: Iterable[tuple[int, int]], directed: bool, name: str = "") -> Graph:
    """Build from 0-indexed (influencer, influenced) pairs; duplicates collapse."""
    if n < 1:
        raise GraphError(f"n must be positive, got {n}")
    sets: list[set[int]] = [set() for _ in range(n)]
    for j, i in edges:
        if not (0 <= j < n and 0 <= i < n):
            raise GraphError(f"edge ({j}, {i}) has an endpoint outside 0..{n - 1}")
        if i == j:
            raise GraphError(f"edge ({j}, {i}) is a self-loop")
        sets[i].add(j)
        if not directed:
            sets[j].add(i)
    return _from_sets(n, sets, directed, name)


def random_strongly_connected(
    n: int, rng: np.random.Generator, directed: bool = False, extra: float = 0.1
) -> Graph:
    """Random connected graph: a random spanning cycle (directed) or tree (undirected) plus
    each remaining pair with probability ``extra``."""
    if n < 2:
        raise GraphError(f"need n >= 2, got {n}")
    order = rng.permutation(n)
    edges: list[tuple[int, int]] = []
    if directed:
        edges += [(int(order[k]), int(order[(k + 1) % n])) for k in range(n)]
    else:
        for k in range(1, n):
            edges.append((int(order[rng.integers(k)]), int(order[k])))
    mask = rng.random((n, n)) < extra
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask)
    edges += [(int(j), int(i)) for j, i in zip(*np.nonzero(mask))]
    kind = "digraph" if directed else "graph"
    return build_from_edges(n, edges, directed, name=f"random {kind} {n}")


def format_edgelist(g: Graph) -> str:
    lines = [f"n {g.n} directed {int(g.directed)}"]
    if g.directed:
        pairs = g.edges()
    else:
        pairs = [(j, i) for j, i in g.edges() if j < i]
    lines += [f"{j + 1} {i + 1}" for j, i in sorted(pairs)]
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str, name: str = "") -> Graph:
    """Parse the ``n <count> directed <0|1>`` header plus 1-indexed ``j i`` lines."""
    header = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 4 or parts[0] != "n" or parts[2] != "directed" or parts[3] not in ("0", "1"):
                raise GraphError(f"line {lineno}: expected header 'n <count> directed <0|1>'")
            try:
                header = (int(parts[1]), parts[3] == "1")
            except ValueError:
                raise GraphError(f"line {lineno}: agent count is not an integer") from None
            continue
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'j i', got {line!r}")
        try:
            j, i = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphError(f"line {lineno}: non-integer agent id in {line!r}") from None
        n = header[0]
        if not (1 <= j <= n and 1 <= i <= n):
            raise GraphError(f"line {lineno}: edge ({j}, {i}) outside 1..{n}")
        if i == j:
            raise GraphError(f"line {lineno}: self-loop on agent {i}")
        edges.append((j - 1, i - 1))
    if header is None:
        raise GraphError("missing header line 'n <count> directed <0|1>'")
    return build_from_edges(header[0], edges, header[1], name=name)


def read_edgelist(path: str | Path) -> Graph:
    path = Path(path)
    return parse_edgelist(path.read_text(), name=f"edges {path}")
