import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coda.analysis import coca_weights, contraction_rate
from coda.dynamics import (
    OpinionState,
    StopCriteria,
    action_counts,
    coca_step,
    coda_step,
    influence_ratio,
    martins_step,
    quantize,
    read_trace_csv,
    run,
    write_summary_json,
    write_trace_csv,
)
from coda.graph import build_complete, build_from_edges, build_ring, random_strongly_connected

import oracles


@pytest.mark.parametrize("p, prev, expected", [(0.3, 1, 0), (0.5, 0, 0), (0.5, 1, 1), (0.7, 0, 1)])
def test_quantize(p, prev, expected):
    assert quantize(p, prev) == expected


def test_quantize_vector_uses_memory_only_on_ties():
    q = quantize(np.array([0.1, 0.5, 0.5, 0.9]), np.array([1, 0, 1, 0]))
    assert q.tolist() == [0, 0, 1, 1]


def test_initial_state_quantizes_itself():
    s = OpinionState.initial([0.2, 0.8])
    assert s.k == 0 and s.q.tolist() == [0, 1]
    assert s.minus.tolist() == [0] and s.plus.tolist() == [1]


# -- COCA --------------------------------------------------------------------

def test_coca_consensus_is_fixed():
    g = build_ring(5)
    assert np.array_equal(coca_step(g, np.full(5, 0.37)), np.full(5, 0.37))


def test_coca_two_agents():
    out = coca_step(build_complete(2), [0.2, 0.8])
    assert out == pytest.approx([0.296, 0.704], abs=1e-15)


def test_coca_isolated_agent_unchanged():
    g = build_from_edges(3, [(0, 1)], directed=True)
    assert coca_step(g, [0.9, 0.1, 0.37])[2] == 0.37


def test_coca_matches_loop_oracle():
    rng = np.random.default_rng(3)
    g = random_strongly_connected(12, rng, directed=True, extra=0.2)
    p = rng.random(12)
    assert coca_step(g, p) == pytest.approx(oracles.coca_step_loop(g.influencers, p), abs=1e-15)


# -- CODA --------------------------------------------------------------------

def test_coda_moves_toward_half():
    g = build_from_edges(3, [(1, 0), (2, 0)], directed=True)
    s = coda_step(g, OpinionState.initial([0.4, 0.3, 0.7]))
    assert s.p[0] == pytest.approx(0.424, abs=1e-15)
    assert 0.4 < s.p[0] < 0.5


def test_coda_fixed_at_ratio():
    g = build_from_edges(3, [(1, 0), (2, 0)], directed=True)
    state = OpinionState(0, np.array([0.5, 0.3, 0.7]), np.array([1, 0, 1], dtype=np.int8))
    assert coda_step(g, state).p[0] == 0.5


def test_coda_single_influencer():
    g = build_from_edges(2, [(1, 0)], directed=True)
    s = coda_step(g, OpinionState.initial([0.2, 0.9]))
    assert s.p[0] == pytest.approx(0.328, abs=1e-15)
    assert s.p[1] == 0.9


def test_coda_matches_loop_oracle():
    rng = np.random.default_rng(5)
    g = random_strongly_connected(15, rng, directed=False, extra=0.3)
    s = OpinionState.initial(rng.random(15))
    expected = oracles.coda_step_loop(g.influencers, s.p, s.q)
    assert coda_step(g, s).p == pytest.approx(expected, abs=1e-15)


def test_ratio_and_counts():
    g = build_from_edges(4, [(1, 0), (2, 0), (3, 0)], directed=True)
    minus, plus = action_counts(g, [0, 1, 1, 0])
    assert minus[0] == 1 and plus[0] == 2
    r = influence_ratio(g, [0, 1, 1, 0])
    assert r[0] == pytest.approx(2 / 3) and np.isnan(r[1])


@st.composite
def coda_states(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    n = draw(st.integers(2, 12))
    g = random_strongly_connected(n, rng, directed=draw(st.booleans()), extra=0.3)
    p = np.array(draw(st.lists(st.floats(1e-6, 1 - 1e-6), min_size=n, max_size=n)))
    return g, OpinionState.initial(p)


@given(coda_states())
def test_coda_ordering_and_closure(case):
    g, s = case
    r = influence_ratio(g, s.q)
    nxt = coda_step(g, s)
    assert np.all((nxt.p > 0) & (nxt.p < 1))
    for i in range(g.n):
        a, b = s.p[i], nxt.p[i]
        if a < r[i]:
            assert a <= b <= r[i]
        elif a > r[i]:
            assert a >= b >= r[i]
        else:
            assert a == b


@given(coda_states())
def test_action_preservation_step_law(case):
    g, s = case
    minus, plus = action_counts(g, s.q)
    nxt = coda_step(g, s)
    for i in range(g.n):
        if s.q[i] == 0 and minus[i] >= plus[i]:
            assert nxt.q[i] == 0
        if s.q[i] == 1 and plus[i] >= minus[i]:
            assert nxt.q[i] == 1


# -- Martins -----------------------------------------------------------------

def test_martins_hand_values():
    g = build_from_edges(2, [(1, 0)], directed=True)
    assert martins_step(g, [0.2, 0.9], [0, 1], 2 / 3)[0] == pytest.approx(1 / 3, abs=1e-15)
    assert martins_step(g, [0.5, 0.9], [0, 1], 0.7)[0] == pytest.approx(0.7, abs=1e-15)


def test_martins_neutral_alpha():
    g = build_complete(4)
    p = np.array([0.1, 0.4, 0.6, 0.95])
    assert martins_step(g, p, quantize(p, 1), 0.5) == pytest.approx(p, abs=1e-15)


@pytest.mark.parametrize("alpha", [0.49, 1.0, 1.5])
def test_martins_rejects_alpha(alpha):
    with pytest.raises(ValueError):
        martins_step(build_complete(2), [0.3, 0.6], [0, 1], alpha)


@settings(max_examples=50)
@given(st.floats(0.01, 0.99), st.lists(st.integers(0, 1), min_size=1, max_size=6), st.floats(0.5, 0.95))
def test_martins_order_independent(p, qs, alpha):
    n = len(qs) + 1
    g = build_from_edges(n, [(j, 0) for j in range(1, n)], directed=True)
    q = np.array([0] + qs)
    got = martins_step(g, np.full(n, p), q, alpha)[0]
    assert got == pytest.approx(oracles.martins_loop(p, qs, alpha), rel=1e-12)
    assert got == pytest.approx(oracles.martins_loop(p, qs[::-1], alpha), rel=1e-12)


def test_martins_saturation_stays_inside():
    g = build_complete(40)
    p = np.full(40, 0.99)
    for _ in range(60):
        p = martins_step(g, p, np.ones(40, dtype=np.int8), 0.9)
    assert np.all((p > 0) & (p < 1))


# -- run driver ----------------------------------------------------------------

def test_kernel_matches_reference_steps_exactly():
    rng = np.random.default_rng(11)
    g = random_strongly_connected(20, rng, directed=True, extra=0.2)
    p0 = rng.random(20)
    tr = run(g, p0, "coda", StopCriteria(max_steps=300, window=10**6, osc_window=10**6))
    s = OpinionState.initial(p0)
    for k in range(1, 301):
        s = coda_step(g, s)
        assert np.array_equal(tr.p[k], s.p), k
        assert np.array_equal(tr.q[k], s.q), k


def test_kernel_matches_coca_and_martins():
    rng = np.random.default_rng(12)
    g = random_strongly_connected(10, rng, extra=0.3)
    p0 = rng.random(10)
    stop = StopCriteria(max_steps=50, window=10**6, osc_window=10**6)
    tr = run(g, p0, "coca", stop)
    p = p0
    for k in range(1, 51):
        p = coca_step(g, p)
        assert np.array_equal(tr.p[k], p)
    tr = run(g, p0, "martins", stop, alpha=0.7)
    p, q = p0, quantize(p0, 1)
    for k in range(1, 51):
        p = martins_step(g, p, q, 0.7)
        q = quantize(p, q)
        assert np.array_equal(tr.p[k], p)
        assert np.array_equal(tr.q[k], q)


def test_run_records_every_step_with_unit_stride():
    tr = run(build_ring(6), [0.1, 0.2, 0.3, 0.7, 0.8, 0.9], "coda", StopCriteria(max_steps=40))
    assert len(tr.ks) == tr.steps + 1
    assert tr.ks.tolist() == list(range(tr.steps + 1))


def test_run_stride_keeps_last_step():
    tr = run(build_ring(6), [0.1, 0.2, 0.3, 0.7, 0.8, 0.9], "coda", StopCriteria(max_steps=95), stride=10)
    assert tr.ks[-1] == 95 and tr.ks[-2] == 90


def test_run_complete_majority_converges_to_zero():
    g = build_complete(5)
    tr = run(g, [0.1, 0.3, 0.4, 0.6, 0.9], "coda", StopCriteria(max_steps=10**7, tol_p=5e-13), stride=10**5)
    assert tr.verdict == "converged"
    assert np.all(tr.final_q == 0)
    assert np.all(tr.final_p < 1e-6)


def test_run_coca_identical_is_fixed():
    g = build_ring(7)
    tr = run(g, np.full(7, 0.42), "coca")
    assert tr.verdict == "converged"
    assert np.all(tr.p == 0.42)


def test_run_coca_accepts_half():
    tr = run(build_ring(4), [0.5, 0.2, 0.5, 0.8], "coca", StopCriteria(max_steps=10))
    assert tr.steps == 10


def test_run_verdict_consistent_with_tail():
    g = build_complete(10)
    eta = np.linspace(0.05, 0.45, 5)
    tr = run(g, np.concatenate([0.5 - eta, 0.5 + eta]), "coda", StopCriteria(max_steps=10_000))
    assert tr.verdict == "oscillating_period2"
    q = tr.q
    for t in range(1, 7):
        assert np.array_equal(q[-t], q[-t - 2])
        assert not np.array_equal(q[-t], q[-t - 1])
    tr = run(g, np.linspace(0.05, 0.45, 10), "coda", StopCriteria(max_steps=10**6))
    assert tr.verdict == "converged"
    assert all(np.array_equal(tr.q[-1], tr.q[-t]) for t in range(1, 11))


@pytest.mark.parametrize(
    "p0, model, match",
    [
        ([0.2, 0.5, 0.7], "coda", "1/2"),
        ([0.2, 0.0, 0.7], "coda", r"\(0, 1\)"),
        ([0.2, 1.0, 0.7], "coca", r"\(0, 1\)"),
        ([0.2, 0.6], "coda", "3 agents"),
    ],
)
def test_run_rejects_bad_initial(p0, model, match):
    with pytest.raises(ValueError, match=match):
        run(build_complete(3), p0, model)


def test_run_rejects_bad_model_args():
    with pytest.raises(ValueError):
        run(build_complete(3), [0.2, 0.4, 0.7], "voter")
    with pytest.raises(ValueError):
        run(build_complete(3), [0.2, 0.4, 0.7], "martins")
    with pytest.raises(ValueError):
        StopCriteria(tol_p=0)


def test_isolated_agent_constant_in_run():
    g = build_from_edges(3, [(0, 1), (1, 0)], directed=False)
    tr = run(g, [0.2, 0.7, 0.37], "coda", StopCriteria(max_steps=200))
    assert np.all(tr.p[:, 2] == 0.37)


def test_flip_times_at_full_resolution():
    g = build_complete(5)
    p0 = [0.1, 0.3, 0.4, 0.6, 0.9]
    fine = run(g, p0, "coda", StopCriteria(max_steps=3000))
    coarse = run(g, p0, "coda", StopCriteria(max_steps=3000), stride=500)
    assert np.array_equal(fine.first_flip, coarse.first_flip)
    assert np.array_equal(fine.last_flip, coarse.last_flip)
    flips = np.flatnonzero(np.any(np.diff(fine.q, axis=0) != 0, axis=0))
    for i in flips:
        changed = np.flatnonzero(np.diff(fine.q[:, i]) != 0) + 1
        assert fine.first_flip[i] == changed[0] and fine.last_flip[i] == changed[-1]


def test_audit_counts_clean_run():
    rng = np.random.default_rng(2)
    g = random_strongly_connected(15, rng, extra=0.2)
    tr = run(g, rng.random(15), "coda", StopCriteria(max_steps=5000), audit=True)
    assert tr.audit["trichotomy_violations"] == 0
    assert tr.audit["step_law_violations"] == 0
    assert tr.audit["closure_violations"] == 0
    assert tr.audit["agent_steps_checked"] == 15 * tr.steps


# -- COCA invariants -------------------------------------------------------------

def test_coca_isolated_subset_monotone():
    # agents 0-2 form a closed group (no influence from 3-5); 3-5 listen to them
    edges = [(0, 1), (1, 2), (2, 0), (1, 0), (0, 3), (3, 4), (4, 5), (5, 3)]
    g = build_from_edges(6, edges, directed=True)
    tr = run(g, [0.15, 0.5, 0.85, 0.3, 0.6, 0.2], "coca", StopCriteria(max_steps=2000))
    sub = tr.p[:, :3]
    assert np.all(np.diff(sub.max(axis=1)) <= 0)
    assert np.all(np.diff(sub.min(axis=1)) >= 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_coca_weight_bounds(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 20))
    g = random_strongly_connected(n, rng, directed=bool(seed % 2), extra=0.2)
    eps = 0.1
    tr = run(g, rng.uniform(eps, 1 - eps, n), "coca", StopCriteria(max_steps=300))
    lo = eps * (1 - eps)
    for p in tr.p:
        off, diag = coca_weights(g, p)
        assert np.all(off >= lo / (n - 1) - 1e-15) and np.all(off <= 0.25)
        assert np.all(diag >= 0.75) and np.all(diag <= 1 - lo + 1e-15)


def test_coca_windowed_contraction():
    """Over n-1 steps every product entry is at least w^(n-1), so the spread shrinks by
    1 - n w^(n-1) or better, where w is the smallest weight."""
    for seed in range(10):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 8))
        g = random_strongly_connected(n, rng, directed=True, extra=0.1)
        eps = 0.1
        tr = run(g, rng.uniform(eps, 1 - eps, n), "coca", StopCriteria(max_steps=400, window=10**6))
        w = 1 - contraction_rate(eps, n)
        factor = 1 - n * w ** (n - 1)
        spread = tr.p.max(axis=1) - tr.p.min(axis=1)
        for k in range(len(spread) - n + 1):
            assert spread[k + n - 1] <= factor * spread[k] + 1e-15


# -- exports ---------------------------------------------------------------------

def test_trace_csv_round_trip(tmp_path):
    tr = run(build_ring(5), [0.1, 0.3, 0.6, 0.7, 0.9], "coda", StopCriteria(max_steps=25))
    path = tmp_path / "t.csv"
    write_trace_csv(tr, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "agent", "p", "q"]
    assert rows[1][:2] == ["0", "1"]
    assert len(rows) == 1 + 5 * len(tr.ks)
    ks, p, q = read_trace_csv(path)
    assert np.array_equal(ks, tr.ks)
    assert np.array_equal(p, tr.p) and np.array_equal(q, tr.q)


def test_summary_json(tmp_path):
    tr = run(build_complete(4), [0.1, 0.2, 0.3, 0.8], "coda", StopCriteria(max_steps=50))
    path = tmp_path / "s.json"
    write_summary_json(tr, path)
    doc = json.loads(path.read_text())
    assert doc["verdict"] == tr.verdict and doc["steps"] == 50
    assert doc["final_q"] == tr.final_q.tolist()
    assert doc["final_p"] == tr.final_p.tolist()
