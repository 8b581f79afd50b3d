"""Hybrid quantum-classical loops: QAOA blocks and a hardware-efficient VQE.

QAOA alternates exact diagonal cost phases exp(-i*gamma*H_C) with mixer
exponentials exp(-i*beta*H_0); the VQE ansatz stacks per-qubit Ry layers
with a ring of controlled-Z entanglers. Both are driven by a seeded,
derivative-free simplex optimizer with random restarts.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from .qsim import (
    DiagonalCostHamiltonian,
    MixerKind,
    MixerSpec,
    StateVector,
    apply_cz,
    apply_ry,
    expectation,
    mixer_dense,
    uniform_superposition,
)

DENSE_MIXER_EXP_MAX_QUBITS = 10


@dataclass
class QaoaParams:
    gammas: np.ndarray
    betas: np.ndarray

    def __post_init__(self):
        self.gammas = np.atleast_1d(np.asarray(self.gammas, dtype=np.float64))
        self.betas = np.atleast_1d(np.asarray(self.betas, dtype=np.float64))
        if self.gammas.shape != self.betas.shape or self.gammas.ndim != 1:
            raise ValueError(
                f"gammas {self.gammas.shape} and betas {self.betas.shape} "
                "must be 1-d sequences of equal length"
            )
        if self.p < 1:
            raise ValueError("at least one block is required")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @staticmethod
    def from_vector(vec: np.ndarray) -> "QaoaParams":
        vec = np.asarray(vec, dtype=np.float64)
        p = vec.size // 2
        return QaoaParams(vec[:p], vec[p:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.gammas, self.betas])


class Entangler(Enum):
    RING_CZ = "ring_cz"
    NONE = "none"


@dataclass
class VqeAnsatz:
    """L layers of per-qubit Ry rotations, each followed by the entangler."""

    layers: int
    thetas: np.ndarray
    entangler: Entangler = Entangler.RING_CZ

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=np.float64)
        if self.layers < 1:
            raise ValueError("at least one ansatz layer is required")
        if self.thetas.ndim != 2 or self.thetas.shape[0] != self.layers:
            raise ValueError(
                f"thetas shape {self.thetas.shape} != ({self.layers}, n_qubits)"
            )

    @property
    def n_qubits(self) -> int:
        return self.thetas.shape[1]


def make_ansatz(n_qubits: int, layers: int, seed,
                entangler: Entangler = Entangler.RING_CZ,
                init_scale: float = 0.5) -> VqeAnsatz:
    rng = np.random.default_rng(seed)
    thetas = rng.uniform(-init_scale, init_scale, size=(layers, n_qubits))
    return VqeAnsatz(layers, thetas, entangler)


def _ring_edges(n: int) -> list[tuple[int, int]]:
    if n < 2:
        return []
    if n == 2:
        return [(0, 1)]
    return [(q, (q + 1) % n) for q in range(n)]


def ansatz_state(ansatz: VqeAnsatz) -> StateVector:
    state = StateVector(ansatz.n_qubits)  # |0...0>
    edges = _ring_edges(ansatz.n_qubits) if ansatz.entangler is Entangler.RING_CZ else []
    for layer in range(ansatz.layers):
        for q in range(ansatz.n_qubits):
            apply_ry(state, q, ansatz.thetas[layer, q])
        for a, b in edges:
            apply_cz(state, a, b)
    return state


@lru_cache(maxsize=8)
def _mixer_eigensystem(mixer: MixerSpec, n_qubits: int):
    return np.linalg.eigh(mixer_dense(mixer, n_qubits))


def _apply_mixer_exponential(state: StateVector, mixer: MixerSpec, beta: float) -> None:
    if mixer.kind is MixerKind.TRANSVERSE_FIELD:
        # exp(-i*beta*(-sum X)) factorizes into per-qubit exp(i*beta*X)
        c = math.cos(beta)
        isin = 1j * math.sin(beta)
        a = state.amplitudes
        for q in range(state.n_qubits):
            view = a.reshape(-1, 2, 1 << q)
            lo = view[:, 0, :]
            hi = view[:, 1, :]
            new_lo = c * lo + isin * hi
            new_hi = isin * lo + c * hi
            view[:, 0, :] = new_lo
            view[:, 1, :] = new_hi
        return
    if state.n_qubits > DENSE_MIXER_EXP_MAX_QUBITS:
        raise ValueError(
            f"dense mixer exponential is limited to {DENSE_MIXER_EXP_MAX_QUBITS} qubits"
        )
    evals, evecs = _mixer_eigensystem(mixer, state.n_qubits)
    state.amplitudes = evecs @ (np.exp(-1j * beta * evals) * (evecs.conj().T @ state.amplitudes))


def qaoa_state(h_c: DiagonalCostHamiltonian, params: QaoaParams,
               mixer: MixerSpec | None = None) -> StateVector:
    """Apply p blocks of U(gamma_j) then U(beta_j) to the uniform state."""
    mixer = mixer or MixerSpec.transverse_field()
    state = uniform_superposition(h_c.n_qubits)
    for gamma, beta in zip(params.gammas, params.betas):
        state.amplitudes *= np.exp(-1j * gamma * h_c.costs)
        _apply_mixer_exponential(state, mixer, beta)
    return state


def qaoa_expectation(h_c: DiagonalCostHamiltonian, params: QaoaParams,
                     mixer: MixerSpec | None = None) -> float:
    return expectation(qaoa_state(h_c, params, mixer), h_c)


# ---------------------------------------------------------------------------
# Classical optimizer: seeded Nelder-Mead with uniform random restarts.

@dataclass
class OptimizeResult:
    best_params: np.ndarray
    best_value: float
    trace: list[tuple[np.ndarray, float]]


class _BudgetExhausted(Exception):
    pass


def optimize_variational(objective, init, budget: int, seed) -> OptimizeResult:
    """Derivative-free simplex descent; every evaluation lands in the trace.

    The initial point is evaluated first, so the result is never worse than
    ``objective(init)``. When a simplex run converges with budget to spare,
    the search restarts from a fresh uniform draw in [-pi, pi]^d.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(seed)
    x0 = np.atleast_1d(np.asarray(init, dtype=np.float64))
    trace: list[tuple[np.ndarray, float]] = []
    best_x = x0.copy()
    best_v = math.inf

    def wrapped(x):
        nonlocal best_x, best_v
        if len(trace) >= budget:
            raise _BudgetExhausted
        x = np.asarray(x, dtype=np.float64)
        v = float(objective(x))
        trace.append((x.copy(), v))
        if v < best_v:
            best_v = v
            best_x = x.copy()
        return v

    start = x0
    while len(trace) < budget:
        try:
            minimize(wrapped, start, method="Nelder-Mead",
                     options={"maxfev": budget - len(trace),
                              "xatol": 1e-8, "fatol": 1e-12})
        except _BudgetExhausted:
            break
        start = rng.uniform(-math.pi, math.pi, size=x0.shape)
    return OptimizeResult(best_x, best_v, trace)


def write_trace_csv(trace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if trace:
            d = len(trace[0][0])
            writer.writerow(["evaluation", *[f"param_{i}" for i in range(d)], "value"])
            for i, (params, value) in enumerate(trace):
                writer.writerow([i, *[repr(float(p)) for p in params], repr(value)])


# ---------------------------------------------------------------------------
# Method entry points.

@dataclass
class QaoaResult:
    best_params: QaoaParams
    best_value: float
    trace: list[tuple[np.ndarray, float]]


def qaoa_optimize(h_c: DiagonalCostHamiltonian, p: int, budget: int, seed,
                  mixer: MixerSpec | None = None) -> QaoaResult:
    """Optimize the 2p block angles against the cost expectation."""
    mixer = mixer or MixerSpec.transverse_field()

    def objective(vec):
        return qaoa_expectation(h_c, QaoaParams.from_vector(vec), mixer)

    result = optimize_variational(objective, np.zeros(2 * p), budget, seed)
    return QaoaResult(QaoaParams.from_vector(result.best_params),
                      result.best_value, result.trace)


@dataclass
class VqeResult:
    best_params: np.ndarray
    best_value: float
    trace: list[tuple[np.ndarray, float]]


def vqe_run(h_c: DiagonalCostHamiltonian, ansatz: VqeAnsatz, budget: int,
            seed) -> VqeResult:
    """Minimize the ansatz expectation of the cost Hamiltonian over thetas."""
    if ansatz.n_qubits != h_c.n_qubits:
        raise ValueError(
            f"ansatz acts on {ansatz.n_qubits} qubits, hamiltonian on {h_c.n_qubits}"
        )
    shape = ansatz.thetas.shape

    def objective(vec):
        trial = VqeAnsatz(ansatz.layers, vec.reshape(shape), ansatz.entangler)
        return expectation(ansatz_state(trial), h_c)

    result = optimize_variational(objective, ansatz.thetas.ravel(), budget, seed)
    return VqeResult(result.best_params.reshape(shape), result.best_value,
                     result.trace)


def linear_ramp_params(p: int, total_time: float) -> QaoaParams:
    """Annealing-style schedule: gamma ramps up, beta ramps down, step dt = T/p."""
    dt = total_time / p
    s = (np.arange(p) + 0.5) / p
    return QaoaParams(dt * s, dt * (1.0 - s))
