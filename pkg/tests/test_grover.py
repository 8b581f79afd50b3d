"""Amplitude-amplification search: iteration formula, analytics, accounting."""
import math

import numpy as np
import pytest

from conftest import LAYERS_6BIT, planted_oracle_with_k
from qns.bitstrings import bits_to_index
from qns.grover import (
    GroverConfig,
    amplified_state,
    grover_search,
    optimal_iterations,
    search_unknown_k,
    success_probability,
)
from qns.oracle import CostOracle


def column_oracle(costs, epsilon):
    costs = np.asarray(costs, dtype=np.float64)
    n = int(costs.size).bit_length() - 1
    return CostOracle(lambda bits: float(costs[bits_to_index(bits)]), n, epsilon)


def test_optimal_iterations_formula():
    assert optimal_iterations(64, 1) == 6   # floor(pi/4 * 8)
    assert optimal_iterations(4, 1) == 1    # floor(pi/4 * 2)
    assert optimal_iterations(16, 16) == 1  # clamped from floor(pi/4)=0
    with pytest.raises(ValueError):
        optimal_iterations(8, 0)
    with pytest.raises(ValueError):
        optimal_iterations(8, 9)


@pytest.mark.parametrize("n", [2, 4, 6, 8])
@pytest.mark.parametrize("k", [1, 2, 3, 5, 8])
def test_statevector_success_matches_closed_form(n, k):
    """Master analytic check: simulated success probability vs sin^2((2t+1) theta)."""
    n_states = 1 << n
    if k > n_states:
        pytest.skip("more solutions than states")
    rng = np.random.default_rng(n * 100 + k)
    marked = np.zeros(n_states, dtype=bool)
    marked[rng.choice(n_states, size=k, replace=False)] = True
    for t in range(0, optimal_iterations(n_states, k) + 2):
        state = amplified_state(marked, n, t)
        simulated = float(state.probabilities()[marked].sum())
        assert abs(simulated - success_probability(n_states, k, t)) < 1e-9


def test_over_rotation_hurts():
    """N=4, k=1: a second iteration overshoots the marked amplitude."""
    marked = np.array([False, False, True, False])
    p1 = amplified_state(marked, 2, 1).probabilities()[2]
    p2 = amplified_state(marked, 2, 2).probabilities()[2]
    assert p2 < p1
    assert abs(p1 - 1.0) < 1e-12


def test_search_finds_unique_solution_with_certainty():
    """n=2, k=1, t=1: success probability is exactly 1, every seed."""
    costs = np.array([1.0, 1.0, 0.0, 1.0])
    for seed in range(10):
        o = column_oracle(costs, 0.5)
        result = grover_search(o, GroverConfig(n_qubits=2, seed=seed))
        assert result.measured_good
        assert result.iterations == 1
        assert result.restarts == 1
        assert bits_to_index(result.bits) == 2


def test_single_shot_frequency_matches_analytic_probability():
    """n=6, k=1, t=6: 1000 seeded runs land within 3 sigma of sin^2(13 asin(1/8))."""
    costs = np.ones(64)
    costs[37] = 0.0
    p = success_probability(64, 1, 6)
    hits = 0
    for seed in range(1000):
        o = column_oracle(costs, 0.5)
        result = grover_search(o, GroverConfig(n_qubits=6, iterations=6,
                                               max_restarts=1, seed=seed))
        hits += result.measured_good
    sigma = math.sqrt(p * (1 - p) / 1000)
    assert abs(hits / 1000 - p) <= 3 * sigma


def test_oracle_call_accounting_is_exact():
    """Reported calls are t*restarts + restarts and match the counter delta."""
    costs = np.linspace(0, 1, 8)  # single solution below 0.1 at index 0
    for seed in range(30):
        o = column_oracle(costs, 0.1)
        cfg = GroverConfig(n_qubits=3, iterations=1, max_restarts=6, seed=seed)
        before = o.call_counter
        result = grover_search(o, cfg)
        assert result.oracle_calls == result.iterations * result.restarts + result.restarts
        assert o.call_counter - before == result.oracle_calls


def test_search_reports_failure_when_nothing_is_marked():
    costs = np.ones(8)
    o = column_oracle(costs, 0.5)
    result = grover_search(o, GroverConfig(n_qubits=3, max_restarts=4, seed=0))
    assert not result.measured_good
    assert result.restarts == 4


def test_auto_mode_falls_back_to_sampling_when_amplification_overshoots():
    """k/N near 3/4 puts one iteration at ~zero success; sampling wins."""
    costs = np.ones(64)
    costs[:49] = 0.0  # k = 49 of 64: sin^2(3 asin(sqrt(49/64))) ~ 0.003
    wins = 0
    for seed in range(50):
        o = column_oracle(costs, 0.5)
        result = grover_search(o, GroverConfig(n_qubits=6, max_restarts=5,
                                               seed=seed))
        assert result.iterations == 0
        assert result.oracle_calls == result.restarts  # verification only
        wins += result.measured_good
    assert wins >= 45  # per-restart success 49/64, five restarts


def test_auto_iterations_uses_known_k_then_marked_count():
    costs = np.zeros(16)
    costs[5:] = 1.0  # k = 5 marked below 0.5
    o = column_oracle(costs, 0.5)
    r = grover_search(o, GroverConfig(n_qubits=4, seed=1))
    assert r.iterations == optimal_iterations(16, 5)
    o2 = column_oracle(costs, 0.5)
    r2 = grover_search(o2, GroverConfig(n_qubits=4, known_k=1, seed=1))
    assert r2.iterations == optimal_iterations(16, 1)


def test_result_record_serialization():
    costs = np.array([1.0, 0.0, 1.0, 1.0])
    o = column_oracle(costs, 0.5)
    result = grover_search(o, GroverConfig(n_qubits=2, seed=3))
    rec = result.to_record()
    assert rec["success"] is True
    assert rec["bits_hex"] == "1"
    assert rec["t"] == result.iterations
    assert rec["oracle_calls"] == result.oracle_calls


def test_unknown_k_succeeds_fast_with_half_space_marked():
    """k = N/2: a verified hit lands within the first two rounds for most seeds."""
    costs = np.zeros(16)
    costs[8:] = 1.0
    within_two = 0
    for seed in range(100):
        o = column_oracle(costs, 0.5)
        result = search_unknown_k(o, 4, seed=seed)
        assert result.measured_good
        within_two += result.restarts <= 2
    assert within_two >= 60  # expected ~75, 3 sigma ~ 62


def test_unknown_k_beats_exhaustive_scan_for_single_solution():
    o, seed = planted_oracle_with_k(LAYERS_6BIT, k_target=1, epsilon=1e-9)
    calls = []
    for s in range(50):
        o.call_counter = 0
        result = search_unknown_k(o, 6, seed=s)
        assert result.measured_good
        calls.append(result.oracle_calls)
    assert np.mean(calls) < 64


def test_unknown_k_exhausts_budget_when_no_solution_exists():
    costs = np.ones(16)
    o = column_oracle(costs, 0.5)
    result = search_unknown_k(o, 4, seed=2)
    assert not result.measured_good
    budget = int(3 * math.sqrt(16) * math.log2(16))
    assert result.oracle_calls >= budget


def test_search_validates_sizes():
    o = column_oracle(np.ones(4), 0.5)
    with pytest.raises(ValueError):
        grover_search(o, GroverConfig(n_qubits=3, seed=0))
    with pytest.raises(ValueError):
        search_unknown_k(o, 3, seed=0)
    with pytest.raises(ValueError):
        GroverConfig(n_qubits=2, iterations=-1)
    with pytest.raises(ValueError):
        GroverConfig(n_qubits=2, max_restarts=0)
