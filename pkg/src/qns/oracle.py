"""Threshold predicates and cost Hamiltonians over mask bitstrings.

The bridge between subnetwork quality and the quantum modules: a
:class:`SubnetworkOracle` answers "does this mask beat the loss threshold?"
(the verification predicate), and full enumeration of a bitstring space
yields the diagonal cost Hamiltonian that annealing and the variational
loops act on.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from . import masknet
from .bitstrings import bits_to_string, index_to_bits
from .qsim import DiagonalCostHamiltonian, max_qubits


class CostOracle:
    """Predicate `cost(bits) < epsilon` over n-bit patterns, with call accounting.

    ``call_counter`` counts predicate-level queries only: one per
    :meth:`is_good` call and one per oracle application charged by a search
    (see :mod:`qns.grover`). ``cost`` itself is free so that searches can
    compile the phase oracle without distorting the accounting.
    """

    def __init__(self, cost_fn, n_bits: int, epsilon: float):
        # epsilon 0 is allowed as a degenerate probe: no mask has loss < 0.
        if not epsilon >= 0:
            raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
        self._cost_fn = cost_fn
        self.n_bits = n_bits
        self.epsilon = float(epsilon)
        self.call_counter = 0
        self._enumerated: np.ndarray | None = None

    def cost(self, bits) -> float:
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size != self.n_bits:
            raise ValueError(f"pattern has {bits.size} bits, oracle expects {self.n_bits}")
        return float(self._cost_fn(bits))

    def is_good(self, bits) -> bool:
        self.call_counter += 1
        return self.cost(bits) < self.epsilon

    def enumerate_costs(self) -> np.ndarray:
        """Cost of every pattern 0..2^n-1 (cached; does not touch the counter)."""
        if self._enumerated is None:
            if self.n_bits > max_qubits():
                raise ValueError(
                    f"{self.n_bits} bits is too large to enumerate "
                    f"(limit {max_qubits()})"
                )
            dim = 1 << self.n_bits
            costs = np.empty(dim)
            for x in range(dim):
                costs[x] = self.cost(index_to_bits(x, self.n_bits))
            self._enumerated = costs
        return self._enumerated

    def marked_table(self) -> np.ndarray:
        return self.enumerate_costs() < self.epsilon


class SubnetworkOracle(CostOracle):
    """Accepts a flat mask iff the masked network's dataset loss is below epsilon."""

    def __init__(self, net: masknet.MaskedNetwork, data: masknet.Dataset,
                 epsilon: float):
        self.net = net
        self.data = data
        self._layout = masknet.mask_layout(net)
        super().__init__(self._mask_loss, net.total_maskable(), epsilon)

    def _mask_loss(self, bits) -> float:
        view = masknet.apply_flat_mask(self.net, masknet.FlatMask(bits, self._layout))
        return masknet.dataset_loss(view, self.data)


def build_cost_hamiltonian(net: masknet.MaskedNetwork, data: masknet.Dataset,
                           n_bits: int | None = None) -> DiagonalCostHamiltonian:
    """costs[x] = dataset loss of the network masked with bitstring x."""
    total = net.total_maskable()
    if n_bits is None:
        n_bits = total
    if n_bits != total:
        raise ValueError(f"n_bits {n_bits} != network maskable count {total}")
    if n_bits > max_qubits():
        raise ValueError(
            f"{n_bits} bits is too large to enumerate (limit {max_qubits()})"
        )
    # epsilon is irrelevant for enumeration; any positive value works.
    costs = SubnetworkOracle(net, data, epsilon=1.0).enumerate_costs()
    return DiagonalCostHamiltonian(n_bits, costs)


def count_solutions(h: DiagonalCostHamiltonian, epsilon: float) -> int:
    """Number of basis states with cost strictly below epsilon."""
    return int(np.count_nonzero(h.costs < epsilon))


def default_epsilon(net: masknet.MaskedNetwork, data: masknet.Dataset, seed,
                    n_probe: int = 64, scale: float = 0.5) -> float:
    """Half the median loss of ``n_probe`` random masks: a task-adaptive threshold."""
    rng = np.random.default_rng(seed)
    n = net.total_maskable()
    layout = masknet.mask_layout(net)
    losses = []
    for _ in range(n_probe):
        bits = rng.integers(0, 2, size=n).astype(np.uint8)
        view = masknet.apply_flat_mask(net, masknet.FlatMask(bits, layout))
        losses.append(masknet.dataset_loss(view, data))
    return float(np.median(losses) * scale)


# ---------------------------------------------------------------------------
# Hamiltonian export: binary (uint32 little-endian qubit count, then 2^n
# float64 little-endian costs) and CSV for inspection.

def save_hamiltonian_bin(h: DiagonalCostHamiltonian, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<I", h.n_qubits))
        fh.write(h.costs.astype("<f8").tobytes())


def load_hamiltonian_bin(path) -> DiagonalCostHamiltonian:
    raw = Path(path).read_bytes()
    (n,) = struct.unpack_from("<I", raw, 0)
    costs = np.frombuffer(raw, dtype="<f8", offset=4)
    if costs.size != 1 << n:
        raise ValueError(f"payload has {costs.size} costs, header says {1 << n}")
    return DiagonalCostHamiltonian(n, costs.astype(np.float64))


def save_hamiltonian_csv(h: DiagonalCostHamiltonian, path) -> None:
    """Rows: index, bitstring (character j = mask bit j), cost."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "bitstring", "cost"])
        for x in range(h.dim):
            writer.writerow([x, bits_to_string(index_to_bits(x, h.n_qubits)),
                             repr(float(h.costs[x]))])
