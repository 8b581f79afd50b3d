"""Dense statevector simulation for small qubit registers.

Everything a register-level search needs: uniform superposition, the handful
of gates used elsewhere in this package (H, X, Z, Ry, CZ), diagonal phase
oracles, mean-inversion diffusion, diagonal cost Hamiltonians, mixer
operators, Trotterized annealing evolution, expectation values, and
non-destructive Born-rule sampling.

Convention: qubit ``j`` is bit ``j`` of a basis-state index, so the index
``6 = 0b110`` has qubit 0 clear and qubits 1 and 2 set. Gate functions
mutate the state in place and return it so calls can be chained. A state
must not be shared mutably between threads; independent states are safe to
process in parallel.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

DEFAULT_MAX_QUBITS = 16
DENSE_EVOLVE_MAX_QUBITS = 12
DEFAULT_TROTTER_STEPS = 400

NORM_ATOL = 1e-9


def max_qubits() -> int:
    """Register-size ceiling; the QNS_MAX_QUBITS env var overrides the default."""
    return int(os.environ.get("QNS_MAX_QUBITS", DEFAULT_MAX_QUBITS))


class StateVector:
    """Amplitudes of an ``n_qubits`` register, stored as 2**n complex128."""

    __slots__ = ("n_qubits", "amplitudes")

    def __init__(self, n_qubits: int, amplitudes=None):
        limit = max_qubits()
        if not 1 <= n_qubits <= limit:
            raise ValueError(f"n_qubits must be in 1..{limit}, got {n_qubits}")
        self.n_qubits = n_qubits
        dim = 1 << n_qubits
        if amplitudes is None:
            amp = np.zeros(dim, dtype=np.complex128)
            amp[0] = 1.0
        else:
            amp = np.array(amplitudes, dtype=np.complex128)
            if amp.shape != (dim,):
                raise ValueError(f"expected {dim} amplitudes, got shape {amp.shape}")
            total = float(np.vdot(amp, amp).real)
            if abs(total - 1.0) > NORM_ATOL:
                raise ValueError(f"amplitudes are not normalized: sum |a|^2 = {total}")
        self.amplitudes = amp

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm_error(self) -> float:
        """|sum of probabilities - 1|, the drift accumulated by fp arithmetic."""
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)

    def copy(self) -> "StateVector":
        out = StateVector.__new__(StateVector)
        out.n_qubits = self.n_qubits
        out.amplitudes = self.amplitudes.copy()
        return out

    @classmethod
    def basis_state(cls, n_qubits: int, index: int) -> "StateVector":
        state = cls(n_qubits)
        if not 0 <= index < state.dim:
            raise ValueError(f"basis index {index} out of range for {n_qubits} qubits")
        state.amplitudes[0] = 0.0
        state.amplitudes[index] = 1.0
        return state


@dataclass(frozen=True)
class DiagonalCostHamiltonian:
    """Diagonal operator whose eigenvalue on basis state x is the cost of x."""

    n_qubits: int
    costs: np.ndarray

    def __post_init__(self):
        costs = np.asarray(self.costs, dtype=np.float64)
        if costs.shape != (1 << self.n_qubits,):
            raise ValueError(
                f"expected {1 << self.n_qubits} costs, got shape {costs.shape}"
            )
        if not np.all(np.isfinite(costs)):
            raise ValueError("costs must all be finite")
        object.__setattr__(self, "costs", costs)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits


class MixerKind(Enum):
    TRANSVERSE_FIELD = "transverse_field"
    BIT_FLIP_GRAPH = "bit_flip_graph"


@dataclass(frozen=True)
class MixerSpec:
    """Exploration Hamiltonian for annealing and QAOA blocks.

    TRANSVERSE_FIELD is -sum_v X_v, whose ground state is the uniform
    superposition. BIT_FLIP_GRAPH flips vertex v only when every neighbor
    of v (in ``graph``) sits in the ``target_bit`` state.
    """

    kind: MixerKind
    graph: tuple[tuple[int, ...], ...] | None = None
    target_bit: int = 0

    @staticmethod
    def transverse_field() -> "MixerSpec":
        return MixerSpec(MixerKind.TRANSVERSE_FIELD)

    @staticmethod
    def bit_flip(graph, target_bit: int = 0) -> "MixerSpec":
        adj = tuple(tuple(int(w) for w in nbrs) for nbrs in graph)
        for v, nbrs in enumerate(adj):
            if v in nbrs:
                raise ValueError(f"vertex {v} has a self-loop")
        if target_bit not in (0, 1):
            raise ValueError(f"target_bit must be 0 or 1, got {target_bit}")
        return MixerSpec(MixerKind.BIT_FLIP_GRAPH, adj, target_bit)


def ring_graph(n: int) -> tuple[tuple[int, ...], ...]:
    """Adjacency list of the cycle over vertices 0..n-1 (a path for n=2)."""
    if n < 1:
        raise ValueError("ring graph needs at least one vertex")
    if n == 1:
        return ((),)
    if n == 2:
        return ((1,), (0,))
    return tuple(((v - 1) % n, (v + 1) % n) for v in range(n))


def mixer_dense(mixer: MixerSpec, n_qubits: int) -> np.ndarray:
    """Dense 2^n x 2^n matrix of the mixer Hamiltonian."""
    dim = 1 << n_qubits
    idx = np.arange(dim)
    h = np.zeros((dim, dim), dtype=np.float64)
    if mixer.kind is MixerKind.TRANSVERSE_FIELD:
        for v in range(n_qubits):
            h[idx ^ (1 << v), idx] += -1.0
        return h
    if mixer.graph is None or len(mixer.graph) != n_qubits:
        raise ValueError(
            f"bit-flip mixer graph must have exactly {n_qubits} vertices"
        )
    b = mixer.target_bit
    for v in range(n_qubits):
        # The 1/2^d(v) prefactor cancels against the neighbor projectors,
        # leaving matrix element 1 exactly when every neighbor equals b.
        allowed = np.ones(dim, dtype=bool)
        for w in mixer.graph[v]:
            allowed &= ((idx >> w) & 1) == b
        src = idx[allowed]
        h[src ^ (1 << v), src] += 1.0
    return h


def _apply_single_qubit(state: StateVector, qubit: int, u00, u01, u10, u11) -> StateVector:
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit index {qubit} out of range for {state.n_qubits} qubits")
    a = state.amplitudes.reshape(-1, 2, 1 << qubit)
    lo = a[:, 0, :]
    hi = a[:, 1, :]
    new_lo = u00 * lo + u01 * hi
    new_hi = u10 * lo + u11 * hi
    a[:, 0, :] = new_lo
    a[:, 1, :] = new_hi
    return state


def uniform_superposition(n_qubits: int) -> StateVector:
    """|s>: every basis amplitude equal to 1/sqrt(2^n)."""
    state = StateVector(n_qubits)
    state.amplitudes[:] = 1.0 / math.sqrt(state.dim)
    return state


def apply_ry(state: StateVector, qubit: int, theta: float) -> StateVector:
    """Single-qubit Y rotation by ``theta`` radians."""
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return _apply_single_qubit(state, qubit, c, -s, s, c)


def apply_h(state: StateVector, qubit: int) -> StateVector:
    r = 1.0 / math.sqrt(2.0)
    return _apply_single_qubit(state, qubit, r, r, r, -r)


def apply_x(state: StateVector, qubit: int) -> StateVector:
    return _apply_single_qubit(state, qubit, 0.0, 1.0, 1.0, 0.0)


def apply_z(state: StateVector, qubit: int) -> StateVector:
    return _apply_single_qubit(state, qubit, 1.0, 0.0, 0.0, -1.0)


def apply_cz(state: StateVector, qubit_a: int, qubit_b: int) -> StateVector:
    """Controlled-Z: negate amplitudes where both qubits are 1."""
    n = state.n_qubits
    if qubit_a == qubit_b:
        raise ValueError("controlled-Z needs two distinct qubits")
    for q in (qubit_a, qubit_b):
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")
    idx = np.arange(state.dim)
    both = (((idx >> qubit_a) & 1) & ((idx >> qubit_b) & 1)).astype(bool)
    state.amplitudes[both] *= -1.0
    return state


def apply_phase_oracle(state: StateVector, marked) -> StateVector:
    """Negate the amplitude of every marked basis state.

    ``marked`` is either a predicate over basis indices 0..2^n-1 or a boolean
    array of length 2^n. Unmarked amplitudes are untouched, so the norm is
    preserved exactly.
    """
    dim = state.dim
    if callable(marked):
        flips = np.fromiter((bool(marked(i)) for i in range(dim)), dtype=bool, count=dim)
    else:
        flips = np.asarray(marked, dtype=bool)
        if flips.shape != (dim,):
            raise ValueError(f"expected {dim} mark flags, got shape {flips.shape}")
    state.amplitudes[flips] *= -1.0
    return state


def apply_diffusion(state: StateVector) -> StateVector:
    """Reflect about the uniform state: a_i -> 2*mean(a) - a_i."""
    mean = state.amplitudes.mean()
    state.amplitudes[:] = 2.0 * mean - state.amplitudes
    return state


def measure(state: StateVector, rng: np.random.Generator) -> int:
    """Draw one basis index with Born-rule probability |a_i|^2.

    Non-destructive: the state is left untouched so one prepared state can
    be sampled repeatedly. Draws come from ``rng`` sequentially, so a fixed
    seed reproduces the exact sample sequence.
    """
    return int(sample(state, rng, 1)[0])


def sample(state: StateVector, rng: np.random.Generator, size: int) -> np.ndarray:
    """Vectorized variant of :func:`measure` returning ``size`` indices."""
    p = state.probabilities()
    cum = np.cumsum(p / p.sum())
    draws = rng.random(size)
    return np.minimum(np.searchsorted(cum, draws, side="right"), state.dim - 1)


def expectation(state: StateVector, h: DiagonalCostHamiltonian) -> float:
    """<psi|H|psi> for a diagonal H: sum_i |a_i|^2 * cost_i."""
    if h.n_qubits != state.n_qubits:
        raise ValueError(
            f"hamiltonian acts on {h.n_qubits} qubits, state has {state.n_qubits}"
        )
    return float(np.dot(state.probabilities(), h.costs))


def evolve(
    state: StateVector,
    h_c: DiagonalCostHamiltonian,
    mixer: MixerSpec,
    total_time: float,
    steps: int = DEFAULT_TROTTER_STEPS,
) -> StateVector:
    """First-order Trotterized evolution under (1 - t/T)*H_mixer + (t/T)*H_C.

    Each step applies the cost phase then the mixer exponential, both
    sampled at the midpoint of the step's time interval. The transverse
    field splits into exact per-qubit rotations; a bit-flip mixer is
    diagonalized densely once, which caps evolution at
    ``DENSE_EVOLVE_MAX_QUBITS`` qubits.
    """
    n = state.n_qubits
    if h_c.n_qubits != n:
        raise ValueError(
            f"hamiltonian acts on {h_c.n_qubits} qubits, state has {n}"
        )
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if not total_time > 0:
        raise ValueError(f"total_time must be positive, got {total_time}")
    if n > DENSE_EVOLVE_MAX_QUBITS:
        raise ValueError(
            f"dense evolution is limited to {DENSE_EVOLVE_MAX_QUBITS} qubits, got {n}"
        )

    dt = total_time / steps
    costs = h_c.costs

    if mixer.kind is MixerKind.TRANSVERSE_FIELD:
        for step in range(steps):
            s = (step + 0.5) / steps
            state.amplitudes *= np.exp(-1j * dt * s * costs)
            # exp(-i * c * (-X)) = cos(c) I + i sin(c) X per qubit
            c = dt * (1.0 - s)
            cos_c = math.cos(c)
            isin_c = 1j * math.sin(c)
            for q in range(n):
                _apply_single_qubit(state, q, cos_c, isin_c, isin_c, cos_c)
        return state

    hm = mixer_dense(mixer, n)
    evals, evecs = np.linalg.eigh(hm)
    evecs_h = evecs.conj().T
    for step in range(steps):
        s = (step + 0.5) / steps
        state.amplitudes *= np.exp(-1j * dt * s * costs)
        c = dt * (1.0 - s)
        state.amplitudes = evecs @ (np.exp(-1j * c * evals) * (evecs_h @ state.amplitudes))
    return state
