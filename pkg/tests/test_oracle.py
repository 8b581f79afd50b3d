"""Threshold oracle, cost Hamiltonians, and their exports."""
import numpy as np
import pytest

from conftest import LAYERS_6BIT, make_planted_task, planted_oracle
from qns import masknet, oracle
from qns.bitstrings import index_to_bits
from qns.oracle import (
    CostOracle,
    SubnetworkOracle,
    build_cost_hamiltonian,
    count_solutions,
    default_epsilon,
    load_hamiltonian_bin,
    save_hamiltonian_bin,
    save_hamiltonian_csv,
)


def test_huge_epsilon_accepts_everything():
    o = planted_oracle(LAYERS_6BIT, seed=1, epsilon=1e9)
    rng = np.random.default_rng(0)
    for _ in range(10):
        assert o.is_good(rng.integers(0, 2, o.n_bits))


def test_zero_epsilon_accepts_nothing():
    o = planted_oracle(LAYERS_6BIT, seed=1, epsilon=0.0)
    rng = np.random.default_rng(0)
    assert not any(o.is_good(rng.integers(0, 2, o.n_bits)) for _ in range(10))


def test_planted_mask_is_accepted_at_tight_epsilon():
    net, data, hidden = make_planted_task(LAYERS_6BIT, seed=3)
    o = SubnetworkOracle(net, data, epsilon=1e-6)
    assert o.is_good(hidden.bits)
    assert o.cost(hidden.bits) == 0.0


def test_call_counter_counts_predicate_queries_only():
    o = planted_oracle(LAYERS_6BIT, seed=2, epsilon=0.1)
    assert o.call_counter == 0
    bits = np.ones(o.n_bits, dtype=np.uint8)
    o.is_good(bits)
    o.is_good(bits)
    assert o.call_counter == 2
    o.cost(bits)
    o.enumerate_costs()
    assert o.call_counter == 2


def test_is_good_rejects_wrong_length():
    o = planted_oracle(LAYERS_6BIT, seed=2, epsilon=0.1)
    with pytest.raises(ValueError):
        o.is_good(np.ones(o.n_bits + 1, dtype=np.uint8))


def test_build_cost_hamiltonian_single_bit_network():
    net = masknet.init_network([(1, 1, "identity")], seed=5)
    rng = np.random.default_rng(1)
    xs = rng.normal(size=(4, 1))
    data = masknet.Dataset(xs, rng.normal(size=(4, 1)))
    h = build_cost_hamiltonian(net, data)
    assert h.costs.shape == (2,)
    for x in range(2):
        view = masknet.apply_flat_mask(net, masknet.flat_mask_from_index(net, x))
        assert h.costs[x] == masknet.dataset_loss(view, data)


def test_degenerate_task_gives_constant_costs():
    net = masknet.init_network([(2, 1, "identity")], seed=5)
    data = masknet.Dataset(np.zeros((3, 2)), np.zeros((3, 1)))
    h = build_cost_hamiltonian(net, data)
    np.testing.assert_array_equal(h.costs, 0.0)


def test_hamiltonian_argmin_matches_exhaustive_loop():
    net, data, _ = make_planted_task(LAYERS_6BIT, seed=7)
    h = build_cost_hamiltonian(net, data)
    best_loop, best_cost = None, np.inf
    for x in range(h.dim):
        view = masknet.apply_flat_mask(net, masknet.flat_mask_from_index(net, x))
        c = masknet.dataset_loss(view, data)
        if c < best_cost:
            best_loop, best_cost = x, c
    assert int(np.argmin(h.costs)) == best_loop
    assert h.costs[best_loop] == best_cost


def test_build_cost_hamiltonian_rejects_wrong_bit_count():
    net, data, _ = make_planted_task(LAYERS_6BIT, seed=7)
    with pytest.raises(ValueError):
        build_cost_hamiltonian(net, data, n_bits=7)


def test_enumeration_refuses_beyond_ceiling(monkeypatch):
    monkeypatch.setenv("QNS_MAX_QUBITS", "4")
    net, data, _ = make_planted_task(LAYERS_6BIT, seed=7)
    with pytest.raises(ValueError):
        build_cost_hamiltonian(net, data)


def test_count_solutions_examples():
    h = oracle.DiagonalCostHamiltonian(2, [0.1, 0.5, 0.2, 0.9])
    assert count_solutions(h, 0.3) == 2
    assert count_solutions(h, 0.05) == 0
    assert count_solutions(h, 10.0) == 4


def test_is_good_iff_enumerated_cost_below_epsilon():
    for seed in range(5):
        o = planted_oracle(LAYERS_6BIT, seed=seed, epsilon=0.05)
        costs = o.enumerate_costs()
        for x in range(1 << o.n_bits):
            bits = index_to_bits(x, o.n_bits)
            assert o.is_good(bits) == (costs[x] < o.epsilon)


def test_default_epsilon_recipe_is_half_random_median():
    net, data, _ = make_planted_task(LAYERS_6BIT, seed=4)
    eps = default_epsilon(net, data, seed=0)
    rng = np.random.default_rng(0)
    losses = []
    layout = masknet.mask_layout(net)
    for _ in range(64):
        bits = rng.integers(0, 2, size=net.total_maskable()).astype(np.uint8)
        view = masknet.apply_flat_mask(net, masknet.FlatMask(bits, layout))
        losses.append(masknet.dataset_loss(view, data))
    assert eps == np.median(losses) * 0.5
    assert eps > 0


def test_function_oracle_wraps_arbitrary_costs():
    column = np.array([0.5, 0.1, 0.9, 0.3])
    o = CostOracle(lambda bits: float(column[bits[0] + 2 * bits[1]]), 2, 0.2)
    assert o.is_good(np.array([1, 0]))
    assert not o.is_good(np.array([0, 0]))
    np.testing.assert_array_equal(o.enumerate_costs(), column)


def test_binary_export_round_trip(tmp_path):
    net, data, _ = make_planted_task(LAYERS_6BIT, seed=8)
    h = build_cost_hamiltonian(net, data)
    path = tmp_path / "h.bin"
    save_hamiltonian_bin(h, path)
    loaded = load_hamiltonian_bin(path)
    assert loaded.n_qubits == h.n_qubits
    np.testing.assert_array_equal(loaded.costs, h.costs)
    assert path.stat().st_size == 4 + 8 * h.dim


def test_csv_export_is_inspectable(tmp_path):
    h = oracle.DiagonalCostHamiltonian(2, [0.0, 1.5, 2.0, 0.25])
    path = tmp_path / "h.csv"
    save_hamiltonian_csv(h, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,bitstring,cost"
    assert lines[1].startswith("0,00,")
    assert lines[2].startswith("1,10,")  # character j is mask bit j
    assert float(lines[4].split(",")[2]) == 0.25
