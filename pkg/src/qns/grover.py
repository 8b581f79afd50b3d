"""Amplitude-amplification search over mask bitstrings.

Wraps the simulator's phase-oracle/diffusion primitives into a verified
search: measured candidates are always re-checked classically before being
accepted, so a returned success is never a sampling fluke. Oracle-call
accounting is at the query level: one call per oracle application inside
the circuit plus one per classical verification.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bitstrings import bits_to_index, bits_to_string, index_to_bits
from .oracle import CostOracle
from .qsim import StateVector, apply_diffusion, apply_phase_oracle, max_qubits, measure, uniform_superposition

UNKNOWN_K_GROWTH = 6.0 / 5.0


@dataclass
class GroverConfig:
    n_qubits: int
    iterations: int | None = None  # None = derive from known_k or the marked count
    known_k: int | None = None
    max_restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.iterations is not None and self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.max_restarts < 1:
            raise ValueError(f"max_restarts must be >= 1, got {self.max_restarts}")


@dataclass
class GroverResult:
    bits: np.ndarray
    measured_good: bool
    oracle_calls: int
    iterations: int
    restarts: int
    seed: int = 0

    def to_record(self) -> dict:
        """Flat run summary; the found bitstring is rendered as hex."""
        return {
            "seed": self.seed,
            "t": self.iterations,
            "restarts": self.restarts,
            "oracle_calls": self.oracle_calls,
            "success": self.measured_good,
            "bits_hex": format(bits_to_index(self.bits), "x"),
            "bits": bits_to_string(self.bits),
        }


def optimal_iterations(n_states: int, k: int) -> int:
    """floor(pi/4 * sqrt(N/k)), clamped to at least one iteration."""
    if k < 1 or k > n_states:
        raise ValueError(f"solution count k={k} must satisfy 1 <= k <= {n_states}")
    return max(1, math.floor(math.pi / 4.0 * math.sqrt(n_states / k)))


def success_probability(n_states: int, k: int, t: int) -> float:
    """Closed form sin^2((2t+1) asin(sqrt(k/N))) for t oracle+diffusion rounds."""
    theta = math.asin(math.sqrt(k / n_states))
    return math.sin((2 * t + 1) * theta) ** 2


def amplified_state(marked: np.ndarray, n_qubits: int, iterations: int) -> StateVector:
    """Uniform state with ``iterations`` oracle+diffusion rounds applied."""
    state = uniform_superposition(n_qubits)
    for _ in range(iterations):
        apply_phase_oracle(state, marked)
        apply_diffusion(state)
    return state


def _resolve_iterations(cfg: GroverConfig, k_marked: int) -> int:
    if cfg.iterations is not None:
        return cfg.iterations
    n_states = 1 << cfg.n_qubits
    k = cfg.known_k if cfg.known_k is not None else k_marked
    if k < 1:
        return 1  # nothing to amplify; a single round keeps the run cheap
    t = optimal_iterations(n_states, k)
    # when most states are marked the clamped single iteration can rotate
    # far past the target (near zero success around k/N = 3/4); verified
    # plain sampling wins there, so use it
    if success_probability(n_states, k, t) < k / n_states:
        return 0
    return t


def grover_search(o: CostOracle, cfg: GroverConfig) -> GroverResult:
    """Search for a pattern accepted by the oracle's threshold predicate.

    Each restart prepares a fresh uniform state, runs the configured number
    of oracle+diffusion iterations, measures, and verifies the candidate
    classically. The reported ``oracle_calls`` is exactly
    iterations * restarts_used + restarts_used.
    """
    n = cfg.n_qubits
    if n > max_qubits():
        raise ValueError(f"{n} qubits exceeds the ceiling {max_qubits()}")
    if n != o.n_bits:
        raise ValueError(f"config has {n} qubits, oracle expects {o.n_bits} bits")
    marked = o.marked_table()
    t = _resolve_iterations(cfg, int(marked.sum()))
    rng = np.random.default_rng(cfg.seed)

    calls = 0
    bits = np.zeros(n, dtype=np.uint8)
    for restart in range(1, cfg.max_restarts + 1):
        state = uniform_superposition(n)
        for _ in range(t):
            apply_phase_oracle(state, marked)
            o.call_counter += 1  # one quantum oracle query
            calls += 1
            apply_diffusion(state)
        bits = index_to_bits(measure(state, rng), n).astype(np.uint8)
        calls += 1
        if o.is_good(bits):
            return GroverResult(bits, True, calls, t, restart, seed=cfg.seed)
    return GroverResult(bits, False, calls, t, cfg.max_restarts, seed=cfg.seed)


def search_unknown_k(o: CostOracle, n_qubits: int, seed: int = 0) -> GroverResult:
    """Exponentially-growing random-iteration schedule for an unknown solution count.

    Round r draws t uniformly from [0, min(ceil(m), ceil(pi/4 sqrt(N)))] with
    m growing by 6/5 per round, runs t iterations, and verifies the
    measurement. Stops on success or when the call budget
    3 * sqrt(N) * log2(N) is exhausted.
    """
    if n_qubits > max_qubits():
        raise ValueError(f"{n_qubits} qubits exceeds the ceiling {max_qubits()}")
    if n_qubits != o.n_bits:
        raise ValueError(f"{n_qubits} qubits requested, oracle expects {o.n_bits} bits")
    n_states = 1 << n_qubits
    budget = int(3 * math.sqrt(n_states) * math.log2(n_states))
    t_cap = math.ceil(math.pi / 4.0 * math.sqrt(n_states))
    marked = o.marked_table()
    rng = np.random.default_rng(seed)

    m = 1.0
    calls = 0
    rounds = 0
    t = 0
    bits = np.zeros(n_qubits, dtype=np.uint8)
    while calls < budget:
        rounds += 1
        t = int(rng.integers(0, min(math.ceil(m), t_cap) + 1))
        state = uniform_superposition(n_qubits)
        for _ in range(t):
            apply_phase_oracle(state, marked)
            o.call_counter += 1
            calls += 1
            apply_diffusion(state)
        bits = index_to_bits(measure(state, rng), n_qubits).astype(np.uint8)
        calls += 1
        if o.is_good(bits):
            return GroverResult(bits, True, calls, t, rounds, seed=seed)
        m *= UNKNOWN_K_GROWTH
    return GroverResult(bits, False, calls, t, rounds, seed=seed)
