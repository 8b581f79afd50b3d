"""Echo state networks with a K-bounded probe-filter selection layer.

A fixed random reservoir feeds a probe filter of N maskable neurons; each
of N ensemble outputs reads exactly K probe neurons, chosen by a
neighborhood table. Per-output losses therefore depend on only K bits,
which makes the full 2^N mask search collapse to a 2^K x N lookup table
that can be optimized exactly (dynamic programming on adjacent
neighborhoods, exhaustive scan otherwise) or per output with a K-qubit
amplitude-amplification search.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .bitstrings import all_patterns, bits_to_index, bits_to_string, index_to_bits
from .grover import GroverConfig, GroverResult, grover_search
from .masknet import Dataset
from .oracle import CostOracle

DEFAULT_WASHOUT = 20
POWER_ITERATIONS = 1000
POWER_TOL = 1e-10
DP_MAX_N = 64
DP_MAX_K = 12
EXHAUSTIVE_MAX_N = 20


# ---------------------------------------------------------------------------
# Reservoir.

@dataclass
class Reservoir:
    w_res: np.ndarray
    w_in: np.ndarray
    spectral_radius: float
    connectivity: float
    seed: int | None = None

    @property
    def size(self) -> int:
        return self.w_res.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_in.shape[1]


def estimate_spectral_radius(w: np.ndarray, iterations: int = POWER_ITERATIONS,
                             tol: float = POWER_TOL, seed: int = 0) -> float:
    """|largest eigenvalue| by power iteration.

    Real nonsymmetric matrices often have a dominant complex-conjugate
    pair, under which the plain norm ratio oscillates forever; each sweep
    therefore fits the quadratic that annihilates the two leading Krylov
    components (the classical power-method treatment of that case) and
    reads the radius off its roots.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {w.shape}")
    if not np.any(w):
        raise ValueError("matrix is identically zero")
    rng = np.random.default_rng(seed)
    v = rng.normal(size=w.shape[0])
    v /= np.linalg.norm(v)
    previous = math.inf
    prev_change = math.inf
    stable = 0
    for _ in range(iterations):
        w1 = w @ v
        n1 = float(np.linalg.norm(w1))
        if n1 == 0.0:
            return 0.0
        w2 = w @ w1
        b1 = w1 / n1
        overlap = float(np.dot(b1, v))
        if 1.0 - overlap * overlap < 1e-12:
            estimate = n1  # Krylov space collapsed: single dominant eigenvalue
        else:
            # solve w2 ~ alpha*b1 + beta*v, then lambda^2 - a*lambda - b = 0
            gram = np.array([[1.0, overlap], [overlap, 1.0]])
            rhs = np.array([np.dot(b1, w2), np.dot(v, w2)])
            alpha, beta = np.linalg.solve(gram, rhs)
            a, b = alpha / n1, beta
            disc = a * a + 4.0 * b
            if disc >= 0.0:
                root = math.sqrt(disc)
                estimate = max(abs(a + root), abs(a - root)) / 2.0
            else:
                estimate = math.sqrt(-b)  # conjugate pair: |lambda|^2 = -b
        n2 = float(np.linalg.norm(w2))
        if n2 == 0.0:
            return 0.0
        v = w2 / n2
        change = abs(estimate - previous)
        scale = tol * max(estimate, 1.0)
        settled = False
        if change < scale:
            # under slow geometric convergence the per-sweep change
            # understates the remaining error; bound it Aitken-style
            ratio = change / prev_change if prev_change > 0 else 0.0
            remaining = change * ratio / (1.0 - ratio) if ratio < 1.0 else math.inf
            settled = remaining < scale
        # the fit oscillates while subdominant modes die out, so a single
        # small step can be a coincidence; demand a few in a row
        stable = stable + 1 if settled else 0
        if stable >= 3:
            return float(estimate)
        previous = estimate
        prev_change = change
    raise RuntimeError(
        f"power iteration did not converge within {iterations} iterations"
    )


def scale_to_spectral_radius(w: np.ndarray, rho_target: float,
                             iterations: int = POWER_ITERATIONS,
                             tol: float = POWER_TOL) -> np.ndarray:
    """Rescale so the estimated spectral radius equals ``rho_target``."""
    estimate = estimate_spectral_radius(w, iterations, tol)
    if estimate == 0.0:
        raise ValueError("cannot rescale a matrix with zero spectral radius")
    return np.asarray(w, dtype=np.float64) * (rho_target / estimate)


def make_reservoir(size: int, input_dim: int, spectral_radius: float = 0.9,
                   connectivity: float = 0.1, seed: int = 0) -> Reservoir:
    if not 0 < spectral_radius < 1:
        raise ValueError(f"spectral radius must be in (0, 1), got {spectral_radius}")
    rng = np.random.default_rng(seed)
    w = rng.uniform(-1.0, 1.0, size=(size, size))
    w *= rng.random((size, size)) < connectivity
    try:
        w_res = scale_to_spectral_radius(w, spectral_radius)
    except RuntimeError as err:
        raise RuntimeError(
            f"reservoir seed {seed}: {err} (near-degenerate leading eigenvalues; "
            "try another seed or raise the iteration cap)"
        ) from err
    w_in = rng.uniform(-1.0, 1.0, size=(size, input_dim))
    return Reservoir(w_res, w_in, spectral_radius, connectivity, seed)


def reservoir_step(r: Reservoir, z: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Linear recurrence z' = W_res z + W_in x (no nonlinearity)."""
    z = np.asarray(z, dtype=np.float64)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if z.shape != (r.size,):
        raise ValueError(f"state shape {z.shape} != ({r.size},)")
    if x.shape != (r.input_dim,):
        raise ValueError(f"input shape {x.shape} != ({r.input_dim},)")
    return r.w_res @ z + r.w_in @ x


def run_reservoir(r: Reservoir, inputs: np.ndarray, z0: np.ndarray | None = None,
                  nonlinearity: str = "identity") -> np.ndarray:
    """Roll the recurrence over a (T, input_dim) sequence; returns (T, size).

    ``nonlinearity="tanh"`` wraps each step in tanh, the conventional
    reservoir variant; the default keeps the recurrence linear.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    z = np.zeros(r.size) if z0 is None else np.asarray(z0, dtype=np.float64)
    states = np.empty((len(inputs), r.size))
    for t, x in enumerate(inputs):
        z = reservoir_step(r, z, x)
        if nonlinearity == "tanh":
            z = np.tanh(z)
        states[t] = z
    return states


# ---------------------------------------------------------------------------
# Probe filter and NK landscape.

@dataclass
class ProbeFilter:
    w_pf: np.ndarray
    mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.w_pf = np.asarray(self.w_pf, dtype=np.float64)
        if self.mask is None:
            self.mask = np.ones(self.w_pf.shape[0], dtype=np.uint8)
        self.mask = np.asarray(self.mask, dtype=np.uint8)
        if self.mask.shape != (self.w_pf.shape[0],):
            raise ValueError(
                f"mask length {self.mask.shape} != probe count {self.w_pf.shape[0]}"
            )

    @property
    def size(self) -> int:
        return self.w_pf.shape[0]


def make_probe_filter(n_probe: int, reservoir_size: int, seed: int = 0) -> ProbeFilter:
    rng = np.random.default_rng(seed)
    return ProbeFilter(rng.uniform(-1.0, 1.0, size=(n_probe, reservoir_size)))


class Topology(str, Enum):
    ADJACENT = "adjacent"
    RANDOM = "random"


@dataclass
class NKLandscape:
    """Each output i reads the K probe neurons listed in neighborhoods[i]."""

    n: int
    k: int
    neighborhoods: np.ndarray
    topology: Topology
    table: np.ndarray | None = None

    def __post_init__(self):
        self.neighborhoods = np.asarray(self.neighborhoods, dtype=np.int64)
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= K <= N, got K={self.k}, N={self.n}")
        if self.neighborhoods.shape != (self.n, self.k):
            raise ValueError(
                f"neighborhood table shape {self.neighborhoods.shape} != ({self.n}, {self.k})"
            )
        for i, row in enumerate(self.neighborhoods):
            if len(set(row.tolist())) != self.k:
                raise ValueError(f"neighborhood {i} has repeated indices")
            if row.min() < 0 or row.max() >= self.n:
                raise ValueError(f"neighborhood {i} has out-of-range indices")
        if self.topology is Topology.ADJACENT:
            for i, row in enumerate(self.neighborhoods):
                expected = (i + np.arange(self.k)) % self.n
                if not np.array_equal(row, expected):
                    raise ValueError(
                        f"neighborhood {i} is not the adjacent window {expected}"
                    )


def make_landscape(n: int, k: int, topology: Topology = Topology.ADJACENT,
                   seed: int | None = None) -> NKLandscape:
    topology = Topology(topology)
    if topology is Topology.ADJACENT:
        rows = (np.arange(n)[:, None] + np.arange(k)[None, :]) % n
    else:
        rng = np.random.default_rng(seed)
        rows = np.stack([rng.choice(n, size=k, replace=False) for _ in range(n)])
    return NKLandscape(n, k, rows, topology)


@dataclass
class NkEsn:
    reservoir: Reservoir
    probe: ProbeFilter
    landscape: NKLandscape
    w_out: np.ndarray
    activation: str = "tanh"
    seed: int | None = None


def make_nkesn(n_outputs: int, k: int, reservoir_size: int, input_dim: int = 1,
               topology: Topology = Topology.ADJACENT,
               spectral_radius: float = 0.9, connectivity: float = 0.1,
               activation: str = "tanh", seed: int = 0) -> NkEsn:
    seeds = np.random.SeedSequence(seed).generate_state(4)
    reservoir = make_reservoir(reservoir_size, input_dim, spectral_radius,
                               connectivity, int(seeds[0]))
    probe = make_probe_filter(n_outputs, reservoir_size, int(seeds[1]))
    rng = np.random.default_rng(int(seeds[2]))
    w_out = rng.uniform(-1.0, 1.0, size=(n_outputs, n_outputs))
    landscape = make_landscape(n_outputs, k, topology, int(seeds[3]))
    return NkEsn(reservoir, probe, landscape, w_out, activation, seed)


def _phi(values: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(values)
    if activation == "identity":
        return values
    raise ValueError(f"unknown activation {activation!r}")


def nkesn_output(z: np.ndarray, pf: ProbeFilter, land: NKLandscape,
                 w_out: np.ndarray, bits, activation: str = "tanh") -> np.ndarray:
    """All N outputs for one reservoir state under the given probe mask.

    Output i sums only its K neighborhood terms: the probe signal, gated by
    the mask bit, weighted by w_out[probe, i], then the activation.
    """
    bits = np.asarray(bits, dtype=np.float64)
    if bits.shape != (land.n,):
        raise ValueError(f"mask has shape {bits.shape}, expected ({land.n},)")
    signals = pf.w_pf @ np.asarray(z, dtype=np.float64)
    gated = signals * bits
    sums = np.array([
        np.dot(w_out[land.neighborhoods[i], i], gated[land.neighborhoods[i]])
        for i in range(land.n)
    ])
    return _phi(sums, activation)


def ensemble_prediction(outputs: np.ndarray) -> float:
    """The deployed prediction: the mean of the N output neurons."""
    return float(np.mean(outputs))


def probe_signal_series(model: NkEsn, data: Dataset,
                        washout: int = DEFAULT_WASHOUT) -> tuple[np.ndarray, np.ndarray]:
    """Raw (unmasked) probe outputs and targets after the washout prefix."""
    states = run_reservoir(model.reservoir, data.inputs)
    signals = states @ model.probe.w_pf.T
    targets = data.targets[:, 0]
    if washout >= len(signals):
        raise ValueError(f"washout {washout} consumes the whole series of {len(signals)}")
    return signals[washout:], targets[washout:]


def per_output_losses(model: NkEsn, data: Dataset, bits,
                      washout: int = DEFAULT_WASHOUT) -> np.ndarray:
    """Mean squared error of each output's series under a full probe mask."""
    signals, targets = probe_signal_series(model, data, washout)
    bits = np.asarray(bits, dtype=np.float64)
    land = model.landscape
    losses = np.empty(land.n)
    for i in range(land.n):
        nb = land.neighborhoods[i]
        series = _phi((signals[:, nb] * bits[nb]) @ model.w_out[nb, i],
                      model.activation)
        losses[i] = np.mean((series - targets) ** 2)
    return losses


def build_table(model: NkEsn, data: Dataset,
                washout: int = DEFAULT_WASHOUT) -> np.ndarray:
    """(2^K, N) table: entry [p, i] is output i's loss when its neighborhood
    bits are set to pattern p (bit j of p gates neighborhood member j)."""
    land = model.landscape
    if land.k > 20:
        raise ValueError(f"K={land.k} is beyond the practical 2^K table bound")
    signals, targets = probe_signal_series(model, data, washout)
    patterns = all_patterns(land.k).astype(np.float64)
    table = np.empty((1 << land.k, land.n))
    for i in range(land.n):
        nb = land.neighborhoods[i]
        weighted = patterns * model.w_out[nb, i]
        series = _phi(signals[:, nb] @ weighted.T, model.activation)
        table[:, i] = np.mean((series - targets[:, None]) ** 2, axis=0)
    model.landscape.table = table
    return table


def pattern_of(bits, land: NKLandscape, output: int) -> int:
    """Pattern index of output ``output`` under a full N-bit assignment."""
    bits = np.asarray(bits)
    nb = land.neighborhoods[output]
    return int(np.dot(bits[nb], 1 << np.arange(land.k)))


def mean_loss_from_table(table: np.ndarray, land: NKLandscape, bits) -> float:
    """(1/N) sum_i table[pattern_i(bits), i]."""
    return float(np.mean([table[pattern_of(bits, land, i), i]
                          for i in range(land.n)]))


# ---------------------------------------------------------------------------
# Exact optimizers over the table.

def exhaustive_optimize(land: NKLandscape, table: np.ndarray) -> tuple[np.ndarray, float]:
    """Scan all 2^N assignments; the reference optimum for any topology."""
    if land.n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"N={land.n} exceeds the exhaustive bound {EXHAUSTIVE_MAX_N}")
    assignments = all_patterns(land.n)
    powers = 1 << np.arange(land.k)
    total = np.zeros(len(assignments))
    for i in range(land.n):
        pattern_idx = assignments[:, land.neighborhoods[i]] @ powers
        total += table[pattern_idx, i]
    best = int(np.argmin(total))
    return index_to_bits(best, land.n).astype(np.uint8), float(total[best] / land.n)


def dp_optimize(land: NKLandscape, table: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact minimizer of the mean per-output loss for adjacent neighborhoods.

    Conditions on the first K-1 bits, sweeps the ring propagating minimal
    partial sums over (K-1)-bit boundary states, then closes the ring with
    the wrap-around subfunctions. Cost O(2^(2K-2) * N) time.
    """
    if land.topology is not Topology.ADJACENT:
        raise ValueError("dynamic programming requires the adjacent topology")
    n, k = land.n, land.k
    if n > DP_MAX_N or k > DP_MAX_K:
        raise ValueError(f"N={n}, K={k} beyond the DP bounds ({DP_MAX_N}, {DP_MAX_K})")

    if k == 1:
        bits = np.argmin(table, axis=0).astype(np.uint8)
        return bits, float(np.mean(table[bits, np.arange(n)]))

    s_bits = k - 1
    n_state = 1 << s_bits
    states = np.arange(n_state)
    x_t = states >> (s_bits - 1)  # the bit appended when reaching each state
    pred_base = (states & ((1 << (s_bits - 1)) - 1)) << 1
    pattern0 = pred_base | (x_t << s_bits)      # predecessor with dropped bit 0
    pattern1 = (pred_base | 1) | (x_t << s_bits)

    best_value = np.inf
    best_bits: np.ndarray | None = None
    for prefix in range(n_state):
        value = np.full(n_state, np.inf)
        value[prefix] = 0.0
        choices = np.empty((n - s_bits, n_state), dtype=np.uint8)
        for t in range(s_bits, n):
            out = t - s_bits  # the subfunction completed by choosing x_t
            cand0 = value[pred_base] + table[pattern0, out]
            cand1 = value[pred_base | 1] + table[pattern1, out]
            take1 = cand1 < cand0
            choices[out] = take1
            value = np.where(take1, cand1, cand0)

        closure = np.zeros(n_state)
        for i in range(n - s_bits, n):
            pattern = np.zeros(n_state, dtype=np.int64)
            for j in range(k):
                idx = (i + j) % n
                if idx >= n - s_bits:
                    bit = (states >> (idx - (n - s_bits))) & 1
                else:
                    bit = np.full(n_state, (prefix >> idx) & 1)
                pattern |= bit << j
            closure += table[pattern, i]

        total = value + closure
        final = int(np.argmin(total))
        if total[final] < best_value:
            best_value = float(total[final])
            # walk the choices backwards to recover x_{N-1} .. x_{S}
            bits = np.empty(n, dtype=np.uint8)
            bits[:s_bits] = index_to_bits(prefix, s_bits)
            state = final
            for t in range(n - 1, s_bits - 1, -1):
                bits[t] = state >> (s_bits - 1)
                dropped = int(choices[t - s_bits, state])
                state = ((state & ((1 << (s_bits - 1)) - 1)) << 1) | dropped
            best_bits = bits
    return best_bits, best_value / n


# ---------------------------------------------------------------------------
# Per-output amplitude amplification over K-bit patterns.

def grover_table_select(column: np.ndarray, epsilon: float, seed: int = 0,
                        max_restarts: int = 8) -> GroverResult:
    """Search one output's 2^K column for a pattern with loss below epsilon."""
    column = np.asarray(column, dtype=np.float64)
    k = int(column.size).bit_length() - 1
    if 1 << k != column.size:
        raise ValueError(f"column length {column.size} is not a power of two")
    oracle = CostOracle(lambda bits: float(column[bits_to_index(bits)]), k, epsilon)
    return grover_search(oracle, GroverConfig(n_qubits=k, max_restarts=max_restarts,
                                              seed=seed))


def select_per_output(table: np.ndarray, land: NKLandscape, epsilons=None,
                      seed: int = 0,
                      max_restarts: int = 8) -> tuple[list[np.ndarray], list[GroverResult]]:
    """Run the K-qubit search independently for every output column."""
    run_seeds = np.random.SeedSequence(seed).generate_state(land.n)
    patterns, results = [], []
    for i in range(land.n):
        eps = (epsilons[i] if epsilons is not None
               else float(table[:, i].min()) + 1e-12)
        result = grover_table_select(table[:, i], eps, seed=int(run_seeds[i]),
                                     max_restarts=max_restarts)
        patterns.append(result.bits)
        results.append(result)
    return patterns, results


@dataclass
class CombineResult:
    bits: np.ndarray
    conflicts: list[dict]
    mean_loss: float | None = None
    dp_loss: float | None = None
    dp_gap: float | None = None


def combine_per_output(patterns, land: NKLandscape,
                       table: np.ndarray | None = None) -> CombineResult:
    """Stitch per-output patterns into one probe mask by majority vote.

    Overlapping neighborhoods can disagree; every contested bit lands in
    the conflict report (ties resolve to 1). With a table, the stitched
    mask's mean loss is evaluated, and on adjacent topologies the gap to
    the dynamic-programming optimum is reported alongside.
    """
    votes_one = np.zeros(land.n, dtype=np.int64)
    votes_zero = np.zeros(land.n, dtype=np.int64)
    for i, pattern in enumerate(patterns):
        pattern = np.asarray(pattern)
        for j, member in enumerate(land.neighborhoods[i]):
            if pattern[j]:
                votes_one[member] += 1
            else:
                votes_zero[member] += 1
    bits = (votes_one >= votes_zero).astype(np.uint8)
    conflicts = [
        {"bit": int(b), "votes_one": int(votes_one[b]), "votes_zero": int(votes_zero[b])}
        for b in range(land.n)
        if votes_one[b] > 0 and votes_zero[b] > 0
    ]
    result = CombineResult(bits, conflicts)
    if table is not None:
        result.mean_loss = mean_loss_from_table(table, land, bits)
        if land.topology is Topology.ADJACENT:
            _, result.dp_loss = dp_optimize(land, table)
            result.dp_gap = result.mean_loss - result.dp_loss
    return result


# ---------------------------------------------------------------------------
# Persistence.

def landscape_table_csv(land: NKLandscape, table: np.ndarray, path) -> None:
    """Rows: output index, pattern bits (character j = neighborhood member j), loss."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["output", "pattern", "loss"])
        for i in range(land.n):
            for p in range(table.shape[0]):
                writer.writerow([i, bits_to_string(index_to_bits(p, land.k)),
                                 repr(float(table[p, i]))])


def esn_to_json(model: NkEsn) -> dict:
    return {
        "esn": {
            "seed": model.seed,
            "activation": model.activation,
            "spectral_radius": model.reservoir.spectral_radius,
            "connectivity": model.reservoir.connectivity,
            "w_res": model.reservoir.w_res.tolist(),
            "w_in": model.reservoir.w_in.tolist(),
            "w_pf": model.probe.w_pf.tolist(),
            "probe_mask": model.probe.mask.tolist(),
            "w_out": model.w_out.tolist(),
            "landscape": {
                "n": model.landscape.n,
                "k": model.landscape.k,
                "topology": model.landscape.topology.value,
                "neighborhoods": model.landscape.neighborhoods.tolist(),
            },
        }
    }


def esn_from_json(doc: dict) -> NkEsn:
    body = doc["esn"]
    land = body["landscape"]
    reservoir = Reservoir(np.array(body["w_res"]), np.array(body["w_in"]),
                          body["spectral_radius"], body["connectivity"],
                          body.get("seed"))
    probe = ProbeFilter(np.array(body["w_pf"]), np.array(body["probe_mask"]))
    landscape = NKLandscape(land["n"], land["k"], np.array(land["neighborhoods"]),
                            Topology(land["topology"]))
    return NkEsn(reservoir, probe, landscape, np.array(body["w_out"]),
                 body["activation"], body.get("seed"))


def save_esn(model: NkEsn, path) -> None:
    Path(path).write_text(json.dumps(esn_to_json(model), indent=2))


def load_esn(path) -> NkEsn:
    return esn_from_json(json.loads(Path(path).read_text()))
