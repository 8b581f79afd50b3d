"""Simulated annealing of a diagonal cost Hamiltonian.

Starts from the uniform superposition (the transverse-field ground state)
and Trotter-evolves under the mixer/cost interpolation; slow schedules end
with most probability mass on the minimum-cost basis states.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .qsim import (
    DEFAULT_TROTTER_STEPS,
    DiagonalCostHamiltonian,
    MixerSpec,
    StateVector,
    evolve,
    expectation,
    mixer_dense,
    uniform_superposition,
)

GROUND_ATOL = 1e-12


@dataclass
class AnnealSchedule:
    total_time: float
    steps: int = DEFAULT_TROTTER_STEPS
    mixer: MixerSpec = field(default_factory=MixerSpec.transverse_field)

    def __post_init__(self):
        if not self.total_time > 0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")


@dataclass
class AnnealResult:
    final_state: StateVector
    p_ground: float
    ground: np.ndarray
    final_expectation: float


def ground_states(h_c: DiagonalCostHamiltonian, atol: float = GROUND_ATOL) -> np.ndarray:
    """Indices of every basis state within ``atol`` of the minimum cost."""
    return np.flatnonzero(h_c.costs <= h_c.costs.min() + atol)


def anneal(h_c: DiagonalCostHamiltonian, sched: AnnealSchedule) -> AnnealResult:
    state = uniform_superposition(h_c.n_qubits)
    evolve(state, h_c, sched.mixer, sched.total_time, sched.steps)
    ground = ground_states(h_c)
    p_ground = float(state.probabilities()[ground].sum())
    return AnnealResult(state, p_ground, ground, expectation(state, h_c))


def instantaneous_hamiltonian(h_c: DiagonalCostHamiltonian, mixer: MixerSpec,
                              t: float, total_time: float) -> np.ndarray:
    """Dense (1 - t/T) * H_mixer + (t/T) * H_C, for endpoint diagnostics."""
    if not 0 <= t <= total_time:
        raise ValueError(f"t={t} outside the schedule [0, {total_time}]")
    s = t / total_time
    return (1.0 - s) * mixer_dense(mixer, h_c.n_qubits) + s * np.diag(h_c.costs)


def sweep_total_time(h_c: DiagonalCostHamiltonian, total_times, steps: int,
                     mixer: MixerSpec | None = None) -> list[dict]:
    """One anneal per T value; rows carry T, steps, p_ground, final expectation."""
    mixer = mixer or MixerSpec.transverse_field()
    rows = []
    for total_time in total_times:
        result = anneal(h_c, AnnealSchedule(total_time, steps, mixer))
        rows.append({
            "total_time": float(total_time),
            "steps": steps,
            "p_ground": result.p_ground,
            "final_expectation": result.final_expectation,
        })
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["total_time", "steps", "p_ground", "final_expectation"])
        for row in rows:
            writer.writerow([row["total_time"], row["steps"],
                             repr(row["p_ground"]), repr(row["final_expectation"])])
