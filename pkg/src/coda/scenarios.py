"""Scenario configs, builtin scenarios, and prediction-vs-simulation checks.

A config is a flat ``key = value`` text file. Only keys that differ from their
defaults need to appear; :func:`format_config` writes them back in canonical
order so a canonical file round-trips byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .dynamics import (
    MODELS,
    SimulationTrace,
    StopCriteria,
    run,
    write_trace_csv,
)
from .graph import Graph, GraphError, build_complete, build_from_edges, build_lattice, build_ring, read_edgelist

CHECKS = ("clusters", "layers", "equilibria", "complete", "oscillation")
LIMIT_TOL = 1e-6
HALF_GAP = 1e-9

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_MISMATCH = 2


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ScenarioConfig:
    topology: str
    name: str = ""
    init: str = "uniform"
    seed: int = 0
    model: str = "coda"
    max_steps: int = 100_000
    tol_p: float = 1e-10
    window: int = 10
    osc_window: int = 6
    stride: int = 1
    out_trace: str = ""
    out_report: str = ""
    checks: tuple[str, ...] = ()

    @property
    def model_name(self) -> str:
        return self.model.split()[0]

    @property
    def alpha(self) -> float | None:
        parts = self.model.split()
        return float(parts[1]) if len(parts) > 1 else None

    @property
    def stop(self) -> StopCriteria:
        return StopCriteria(self.max_steps, self.tol_p, self.window, self.osc_window)

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_ORDER = (
    "name", "topology", "init", "seed", "model", "max_steps", "tol_p", "window", "osc_window",
    "stride", "out_trace", "out_report", "checks",
)


def _format_value(key: str, value) -> str:
    if key == "checks":
        return ", ".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: ScenarioConfig) -> str:
    lines = []
    for key in _ORDER:
        value = getattr(cfg, key)
        f = _FIELDS[key]
        if f.default is not dataclasses.MISSING and value == f.default:
            continue
        lines.append(f"{key} = {_format_value(key, value)}")
    return "\n".join(lines) + "\n"


MINORITY10_EDGES = [
    (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4),
    (1, 5), (2, 5), (5, 6),
    (2, 6), (3, 6),
    (3, 7), (4, 7), (7, 9),
    (4, 8), (1, 8), (8, 9),
    (9, 10),
]


def build_minority10() -> Graph:
    """Ten agents where the clique {1,2,3,4} drives {5,6,7,8}, then {9}, then {10}.

    Agents 5..8 each have two of three influencers in the clique, agent 9 has two of
    three in {7, 8}, and agent 10 listens only to 9.
    """
    return build_from_edges(
        10, [(a - 1, b - 1) for a, b in MINORITY10_EDGES], directed=False, name="minority10"
    )


def _split_list(text: str) -> list[str]:
    return [t for t in (s.strip() for s in text.replace(",", " ").split()) if t]


def build_graph(topology: str, base_dir: Path | None = None) -> Graph:
    parts = topology.split()
    if not parts:
        raise ConfigError(["topology is empty"])
    kind, args = parts[0], parts[1:]
    try:
        if kind == "complete" and len(args) == 1:
            return build_complete(int(args[0]))
        if kind == "ring" and len(args) == 1:
            return build_ring(int(args[0]))
        if kind == "lattice" and len(args) == 1 and "x" in args[0]:
            rows, cols = args[0].split("x")
            return build_lattice(int(rows), int(cols))
        if kind == "edges" and len(args) == 1:
            path = Path(args[0])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            return read_edgelist(path)
        if kind == "minority10" and not args:
            return build_minority10()
    except (ValueError, OSError) as exc:
        raise ConfigError([f"topology {topology!r}: {exc}"]) from None
    raise ConfigError([
        f"topology {topology!r} not understood; expected 'complete N', 'ring N', 'lattice RxC', "
        "'edges PATH' or 'minority10'"
    ])


def draw_opinions(rng: np.random.Generator, size: int, high: float = 1.0) -> np.ndarray:
    """Uniform draws on (0, high), redrawing anything within HALF_GAP of 1/2 or at 0."""
    x = rng.uniform(0.0, high, size)
    while True:
        bad = (np.abs(x - 0.5) < HALF_GAP) | (x <= 0.0)
        if not bad.any():
            return x
        x[bad] = rng.uniform(0.0, high, int(bad.sum()))


def symmetric_pairs(eta) -> np.ndarray:
    """Opinions 1/2 - eta_i for the first half and 1/2 + eta_i for the second."""
    eta = np.asarray(eta, dtype=float)
    return np.concatenate([0.5 - eta, 0.5 + eta])


def initial_opinions(cfg: ScenarioConfig, n: int) -> np.ndarray:
    parts = cfg.init.split(None, 1)
    kind = parts[0] if parts else ""
    rest = parts[1] if len(parts) > 1 else ""
    rng = np.random.default_rng(cfg.seed)
    if kind == "uniform":
        return draw_opinions(rng, n, 1.0)
    if kind == "explicit":
        return np.array([float(x) for x in _split_list(rest)])
    if kind == "symmetric-pairs":
        if rest:
            eta = np.array([float(x) for x in _split_list(rest)])
        else:
            # p = 1/2 - eta, so keeping p off 1/2 and off 0 keeps eta inside (0, 1/2)
            eta = 0.5 - draw_opinions(rng, n // 2, 0.5)
        return symmetric_pairs(eta)
    raise ConfigError([f"init {cfg.init!r} not understood"])


def _parse_value(key: str, raw: str):
    f = _FIELDS[key]
    if key == "checks":
        items = tuple(_split_list(raw))
        if items == ("all",):
            return CHECKS
        return items
    if f.type in ("int", int):
        return int(raw)
    if f.type in ("float", float):
        return float(raw)
    return raw


def parse_config(text: str) -> ScenarioConfig:
    """Parse config text, collecting every problem before raising :class:`ConfigError`."""
    values: dict[str, object] = {}
    where: dict[str, int] = {}
    errors: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        if key in values:
            errors.append(f"line {lineno} ({key}): duplicate key, first set on line {where[key]}")
            continue
        try:
            values[key] = _parse_value(key, val)
            where[key] = lineno
        except ValueError:
            errors.append(f"line {lineno} ({key}): cannot parse {val!r}")
    if "topology" not in values:
        errors.append("topology: required key missing")
    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(**values)


def validate_config(text: str, base_dir: Path | None = None) -> ScenarioConfig:
    """Parse and check a config; raises :class:`ConfigError` listing every violation."""
    cfg = parse_config(text)
    errors = config_errors(cfg, base_dir)
    if errors:
        raise ConfigError(errors)
    return cfg


def config_errors(cfg: ScenarioConfig, base_dir: Path | None = None) -> list[str]:
    errors: list[str] = []
    n = None
    try:
        n = build_graph(cfg.topology, base_dir).n
    except ConfigError as exc:
        errors += exc.errors

    model_parts = cfg.model.split()
    model = model_parts[0] if model_parts else ""
    if model not in MODELS:
        errors.append(f"model: {cfg.model!r} is not one of coca, coda, martins <alpha>")
    elif model == "martins":
        try:
            alpha = float(model_parts[1]) if len(model_parts) == 2 else None
        except ValueError:
            alpha = None
        if alpha is None or not (0.5 <= alpha < 1.0):
            errors.append("model: martins needs one alpha in [1/2, 1), e.g. 'martins 0.7'")
    elif len(model_parts) > 1:
        errors.append(f"model: {model} takes no parameter")

    for key in ("max_steps", "window", "osc_window", "stride"):
        if getattr(cfg, key) < 1:
            errors.append(f"{key}: must be >= 1")
    if not cfg.tol_p > 0:
        errors.append("tol_p: must be > 0")
    bad_checks = [c for c in cfg.checks if c not in CHECKS]
    if bad_checks:
        errors.append(f"checks: unknown {', '.join(bad_checks)}; choose from {', '.join(CHECKS)} or all")

    parts = cfg.init.split(None, 1)
    kind = parts[0] if parts else ""
    rest = parts[1] if len(parts) > 1 else ""
    quantized = model != "coca"
    if kind == "uniform":
        if rest:
            errors.append("init: uniform takes no values (use seed)")
    elif kind == "explicit":
        try:
            vals = [float(x) for x in _split_list(rest)]
        except ValueError:
            errors.append("init: explicit values must be numbers")
            vals = []
        if n is not None and len(vals) != n:
            errors.append(f"init: explicit gives {len(vals)} opinions for {n} agents")
        for i, v in enumerate(vals, 1):
            if not (0.0 < v < 1.0):
                errors.append(f"init: agent {i} opinion {v} outside (0, 1)")
            elif quantized and v == 0.5:
                errors.append(
                    f"init: agent {i} starts at 1/2, but quantized models require p_i(0) != 1/2"
                )
    elif kind == "symmetric-pairs":
        if n is not None and n % 2:
            errors.append(f"init: symmetric-pairs needs an even number of agents, got {n}")
        if rest:
            try:
                eta = [float(x) for x in _split_list(rest)]
            except ValueError:
                errors.append("init: symmetric-pairs offsets must be numbers")
                eta = []
            if n is not None and n % 2 == 0 and len(eta) != n // 2:
                errors.append(f"init: symmetric-pairs gives {len(eta)} offsets for {n // 2} pairs")
            for i, e in enumerate(eta, 1):
                if not (0.0 < e < 0.5):
                    errors.append(f"init: offset {i} = {e} outside (0, 1/2)")
    else:
        errors.append(f"init: {cfg.init!r} is not explicit <values>, uniform, or symmetric-pairs [offsets]")
    return errors


BUILTINS: dict[str, str] = {
    "minority10": """\
name = minority10
topology = minority10
init = explicit 0.3, 0.35, 0.45, 0.4, 0.6, 0.65, 0.7, 0.75, 0.55, 0.8
max_steps = 10000000
tol_p = 5e-13
stride = 1000
checks = clusters, layers, equilibria
""",
    "lattice6": """\
name = lattice6
topology = lattice 6x6
seed = 30
max_steps = 10000000
tol_p = 5e-13
stride = 1000
checks = clusters, layers, equilibria
""",
    "complete100sym": """\
name = complete100sym
topology = complete 100
init = symmetric-pairs
seed = 7
stride = 10
checks = clusters, oscillation
""",
    "lattice50": """\
name = lattice50
topology = lattice 50x50
seed = 1
max_steps = 100
checks = clusters
""",
}


def builtin(name: str) -> ScenarioConfig:
    try:
        return parse_config(BUILTINS[name])
    except KeyError:
        raise ConfigError([f"no builtin scenario {name!r}; have {', '.join(BUILTINS)}"]) from None


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.status == "fail"


def check_clusters(trace: SimulationTrace, report: analysis.ClusterReport) -> CheckResult:
    """Members of every initial robust cluster never change action and end on its side of 1/2."""
    if not report.clusters:
        return CheckResult("clusters", "skipped", "no robust cluster detected")
    bad = []
    for c in report.clusters:
        idx = np.array(sorted(c.agents))
        flipped = idx[trace.first_flip[idx] >= 0]
        side = trace.final_p[idx] <= 0.5 if c.action == 0 else trace.final_p[idx] >= 0.5
        wrong = np.concatenate([flipped, idx[~side]])
        bad += [int(i) for i in np.unique(wrong)]
    if bad:
        return CheckResult("clusters", "fail", f"agents {[i + 1 for i in bad]} left their cluster action")
    return CheckResult("clusters", "pass", f"{len(report.clusters)} clusters kept their action")


def check_layers(trace: SimulationTrace, report: analysis.ClusterReport, tail: int = 10) -> CheckResult:
    """Layer members play the chain's action over the trace tail, and nobody in layer h+1
    settles before someone in layer h has switched."""
    chains = {a: ch for a, ch in report.layers.items() if len(ch) > 1}
    if not chains:
        return CheckResult("layers", "skipped", "no diffusion beyond the clusters")
    problems = []
    q_tail = trace.q[-tail:]
    for a, chain in chains.items():
        for h, layer in enumerate(chain):
            idx = np.array(sorted(layer))
            if np.any(q_tail[:, idx] != a):
                problems.append(f"layer {h + 1} of action {a} not settled on {a}")
        for h in range(len(chain) - 1):
            prev = np.array(sorted(chain[h]))
            nxt = np.array(sorted(chain[h + 1]))
            # agents already playing a count as switched at step 0
            switched = np.where(trace.q[0, prev] == a, 0, trace.first_flip[prev])
            switched = switched[switched >= 0]
            if switched.size == 0:
                problems.append(f"layer {h + 1} of action {a} never switched")
                continue
            movers = nxt[trace.q[0, nxt] != a]
            early = movers[trace.last_flip[movers] <= switched.min()]
            if early.size:
                problems.append(
                    f"agents {[int(i) + 1 for i in early]} settled before layer {h + 1} switched"
                )
    if problems:
        return CheckResult("layers", "fail", "; ".join(problems))
    sizes = {a: [len(layer) for layer in ch] for a, ch in chains.items()}
    return CheckResult("layers", "pass", f"layer sizes {sizes} settled in order")


def check_equilibria(trace: SimulationTrace) -> CheckResult:
    if trace.model != "coda":
        return CheckResult("equilibria", "skipped", "equilibrium set applies to coda runs")
    if trace.verdict != "converged":
        return CheckResult("equilibria", "skipped", f"run ended {trace.verdict}")
    S = analysis.equilibrium_set(trace.graph.n)
    active = trace.graph.degrees > 0
    dist = S.distance(trace.final_p)
    bad = np.flatnonzero(active & (dist > LIMIT_TOL))
    if bad.size:
        return CheckResult(
            "equilibria", "fail",
            f"agents {[int(i) + 1 for i in bad]} end {float(dist[bad].max()):.3g} away from S",
        )
    return CheckResult("equilibria", "pass", f"all limits within {LIMIT_TOL} of S({trace.graph.n})")


def check_complete(trace: SimulationTrace) -> CheckResult:
    g = trace.graph
    if trace.model != "coda" or not g.is_complete():
        return CheckResult("complete", "skipped", "needs coda on a complete graph")
    pred = analysis.predict_complete_graph(g, trace.q[0])
    if pred == "oscillation-candidate":
        return CheckResult("complete", "skipped", "even split; see oscillation check")
    target = 0.0 if pred == "all->0" else 1.0
    gap = float(np.max(np.abs(trace.final_p - target)))
    if gap > LIMIT_TOL:
        return CheckResult("complete", "fail", f"{pred} predicted, max distance {gap:.3g}")
    return CheckResult("complete", "pass", f"{pred}, max distance {gap:.3g}")


def check_oscillation(trace: SimulationTrace) -> CheckResult:
    g = trace.graph
    if trace.model != "coda" or not g.is_complete() or not analysis.is_symmetric_pairs(trace.p[0], 1e-12):
        return CheckResult("oscillation", "skipped", "needs coda on a complete graph with symmetric pairs")
    eps = analysis.oscillation_band(g.n)
    if trace.verdict != "oscillating_period2":
        return CheckResult("oscillation", "fail", f"run ended {trace.verdict}")
    band = trace.band
    if band > eps:
        return CheckResult("oscillation", "fail", f"band {band:.6g} exceeds eps* {eps:.6g}")
    return CheckResult("oscillation", "pass", f"band {band:.6g} <= eps* {eps:.6g}")


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    trace: SimulationTrace
    report: analysis.ClusterReport
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_MISMATCH if any(c.failed for c in self.checks) else EXIT_PASS

    def to_dict(self) -> dict:
        return {
            "scenario": self.config.name,
            "config": format_config(self.config),
            "simulation": self.trace.summary(),
            "structure": self.report.to_dict(),
            "checks": [dataclasses.asdict(c) for c in self.checks],
            "exit_code": self.exit_code,
        }


def run_scenario(cfg: ScenarioConfig, base_dir: Path | None = None) -> ScenarioResult:
    """Build, simulate, predict, check, and write any requested outputs."""
    errors = config_errors(cfg, base_dir)
    if errors:
        raise ConfigError(errors)
    g = build_graph(cfg.topology, base_dir)
    p0 = initial_opinions(cfg, g.n)
    trace = run(g, p0, cfg.model_name, cfg.stop, alpha=cfg.alpha, stride=cfg.stride)
    report = analysis.cluster_report(g, trace.q[0])

    results = []
    for name in cfg.checks:
        if name == "clusters":
            results.append(check_clusters(trace, report))
        elif name == "layers":
            results.append(check_layers(trace, report))
        elif name == "equilibria":
            results.append(check_equilibria(trace))
        elif name == "complete":
            results.append(check_complete(trace))
        elif name == "oscillation":
            results.append(check_oscillation(trace))
    result = ScenarioResult(cfg, trace, report, results)

    if cfg.out_trace:
        write_trace_csv(trace, cfg.out_trace)
    if cfg.out_report:
        Path(cfg.out_report).write_text(json.dumps(result.to_dict(), indent=2) + "\n")
    return result


__all__ = [
    "BUILTINS", "CHECKS", "CheckResult", "ConfigError", "ScenarioConfig", "ScenarioResult",
    "GraphError", "build_graph", "build_minority10", "builtin", "config_errors", "format_config",
    "initial_opinions", "parse_config", "run_scenario", "symmetric_pairs", "validate_config",
]
