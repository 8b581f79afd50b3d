"""Layerwise teacher-student mask selection.

A trained teacher of depth l guides a random student of depth 2l: for each
teacher layer, the matching two-layer student block is mask-optimized to
reproduce the teacher's recorded activations, then its (masked, compressed)
output feeds the next block. Backends range from exhaustive enumeration
(the ground truth) to threshold-oracle search and Hamiltonian methods,
which always report their gap to the exhaustive optimum.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import anneal as anneal_mod
from . import masknet, variational
from .bitstrings import index_to_bits
from .grover import GroverConfig, grover_search
from .masknet import Activation, Dataset, LayerSpec, MaskedNetwork
from .oracle import CostOracle
from .qsim import DiagonalCostHamiltonian, max_qubits


class CompressMode(str, Enum):
    AVERAGE_POOL = "average_pool"
    MAGNITUDE_TOP_K = "magnitude_top_k"


class Backend(str, Enum):
    GROVER = "grover"
    QAOA = "qaoa"
    ANNEAL = "anneal"
    EXHAUSTIVE = "exhaustive"


class Chaining(str, Enum):
    STUDENT = "student"  # blocks see the assembled student's own outputs
    TEACHER = "teacher"  # blocks see the teacher's recorded activations


@dataclass
class TeacherStudentPair:
    """Teacher network plus a student stored as one two-layer block per teacher layer.

    Block i maps the teacher's layer-i input width to ``width_factor`` times
    its output width (ReLU hidden, identity output); compression brings the
    block output back down to the teacher width for both the loss and the
    chained input of the next block.
    """

    teacher: MaskedNetwork
    blocks: list[MaskedNetwork]
    width_factor: int

    def __post_init__(self):
        if len(self.blocks) != self.teacher.depth:
            raise ValueError(
                f"{len(self.blocks)} student blocks for a depth-{self.teacher.depth} teacher"
            )
        for i, (block, spec) in enumerate(zip(self.blocks, self.teacher.specs)):
            if block.depth != 2:
                raise ValueError(f"student block {i} must have exactly two layers")
            if block.input_dim != spec.fan_in:
                raise ValueError(
                    f"block {i} input {block.input_dim} != teacher fan_in {spec.fan_in}"
                )
            if block.output_dim < spec.fan_out:
                raise ValueError(
                    f"block {i} output {block.output_dim} narrower than teacher "
                    f"fan_out {spec.fan_out}"
                )

    @property
    def student_depth(self) -> int:
        return 2 * self.teacher.depth


def make_student(teacher: MaskedNetwork, width_factor: int, seed) -> TeacherStudentPair:
    """Random student blocks sized width_factor x the teacher widths."""
    if width_factor < 1:
        raise ValueError(f"width_factor must be >= 1, got {width_factor}")
    block_seeds = np.random.SeedSequence(seed).generate_state(teacher.depth)
    blocks = []
    for spec, block_seed in zip(teacher.specs, block_seeds):
        wide = width_factor * spec.fan_out
        blocks.append(masknet.init_network(
            [LayerSpec(spec.fan_in, wide, Activation.RELU),
             LayerSpec(wide, wide, Activation.IDENTITY)],
            int(block_seed),
        ))
    return TeacherStudentPair(teacher, blocks, width_factor)


@dataclass
class ActivationTrace:
    """Per-layer post-activation outputs over a dataset's samples."""

    layers: list[np.ndarray]

    def __post_init__(self):
        counts = {len(a) for a in self.layers}
        if len(counts) > 1:
            raise ValueError(f"inconsistent sample counts across layers: {counts}")


def record_activations(net: MaskedNetwork, data: Dataset) -> ActivationTrace:
    """Exact post-activation outputs of every layer for every sample."""
    z = data.inputs
    layers = []
    for i, spec in enumerate(net.specs):
        z = z @ (net.masks[i] * net.weights[i]) + net.biases[i]
        if spec.activation is Activation.RELU:
            z = np.maximum(z, 0.0)
        layers.append(z)
    return ActivationTrace(layers)


def compress(vector: np.ndarray, target_dim: int,
             mode: CompressMode = CompressMode.AVERAGE_POOL) -> np.ndarray:
    """Shrink an activation vector to ``target_dim`` entries.

    AVERAGE_POOL means contiguous group means (the source dimension must be
    divisible); MAGNITUDE_TOP_K keeps the largest-|value| entries in their
    original order.
    """
    vector = np.asarray(vector, dtype=np.float64)
    batched = vector.ndim == 2
    rows = vector if batched else vector[None, :]
    dim = rows.shape[1]
    if dim < target_dim:
        raise ValueError(f"cannot compress {dim} values up to {target_dim}")
    mode = CompressMode(mode)
    if mode is CompressMode.AVERAGE_POOL:
        if dim % target_dim != 0:
            raise ValueError(
                f"average pooling needs {target_dim} to divide {dim}"
            )
        out = rows.reshape(len(rows), target_dim, dim // target_dim).mean(axis=2)
    else:
        order = np.argsort(-np.abs(rows), axis=1, kind="stable")[:, :target_dim]
        keep = np.sort(order, axis=1)
        out = np.take_along_axis(rows, keep, axis=1)
    return out if batched else out[0]


def block_loss(teacher_acts: np.ndarray, block: MaskedNetwork, bits,
               block_inputs: np.ndarray,
               mode: CompressMode = CompressMode.AVERAGE_POOL) -> float:
    """Mean L2 distance between teacher activations and the compressed
    masked block output, over the given block inputs."""
    view = masknet.apply_flat_mask(block, masknet.flat_mask(block, bits))
    out = masknet.forward_batch(view, block_inputs)
    compressed = compress(out, teacher_acts.shape[1], mode)
    return float(np.mean(np.linalg.norm(compressed - teacher_acts, axis=1)))


# ---------------------------------------------------------------------------
# Block-by-block selection.

@dataclass
class BlockReport:
    index: int
    bits: np.ndarray
    loss: float
    exhaustive_min: float | None = None
    gap: float | None = None
    oracle_calls: int = 0
    epsilon: float | None = None


@dataclass
class DistillResult:
    masks: list[masknet.FlatMask]
    reports: list[BlockReport]

    @property
    def total_loss(self) -> float:
        return float(sum(r.loss for r in self.reports))


def _block_epsilon(cost_fn, n_bits: int, rng: np.random.Generator,
                   n_probe: int = 16, scale: float = 1.1) -> float:
    best = min(cost_fn(rng.integers(0, 2, size=n_bits).astype(np.uint8))
               for _ in range(n_probe))
    return float(best * scale) if best > 0 else 1e-12


def distill_select(pair: TeacherStudentPair, data: Dataset,
                   backend: Backend = Backend.EXHAUSTIVE,
                   per_block_bit_budget: int = 12,
                   mode: CompressMode = CompressMode.AVERAGE_POOL,
                   chaining: Chaining = Chaining.STUDENT,
                   epsilons=None, seed: int = 0,
                   qaoa_blocks: int = 2, optimizer_budget: int = 300,
                   anneal_time: float = 40.0, anneal_steps: int = 400,
                   max_restarts: int = 8) -> DistillResult:
    """Select one mask per student block, feeding blocks forward in order.

    Quantum backends require each block's maskable parameter count to fit
    the qubit ceiling. QAOA and annealing optimize the enumerated block
    Hamiltonian and report their gap to the exhaustive block optimum.
    """
    backend = Backend(backend)
    teacher_trace = record_activations(pair.teacher, data)
    rng = np.random.default_rng(seed)

    masks: list[masknet.FlatMask] = []
    reports: list[BlockReport] = []
    block_inputs = data.inputs
    for i, block in enumerate(pair.blocks):
        n_bits = block.total_maskable()
        if n_bits > per_block_bit_budget:
            raise ValueError(
                f"block {i} has {n_bits} maskable parameters, budget is "
                f"{per_block_bit_budget}"
            )
        if backend is not Backend.EXHAUSTIVE and n_bits > max_qubits():
            raise ValueError(
                f"block {i} needs {n_bits} qubits, ceiling is {max_qubits()}"
            )
        teacher_acts = teacher_trace.layers[i]
        inputs = block_inputs

        def cost_fn(bits, _block=block, _acts=teacher_acts, _inputs=inputs):
            return block_loss(_acts, _block, bits, _inputs, mode)

        costs = np.array([cost_fn(index_to_bits(x, n_bits))
                          for x in range(1 << n_bits)])
        exhaustive_min = float(costs.min())
        report = BlockReport(i, np.zeros(n_bits, np.uint8), 0.0,
                             exhaustive_min=exhaustive_min)

        if backend is Backend.EXHAUSTIVE:
            best = int(np.argmin(costs))
            report.bits = index_to_bits(best, n_bits).astype(np.uint8)
        elif backend is Backend.GROVER:
            eps = (epsilons[i] if epsilons is not None
                   else _block_epsilon(cost_fn, n_bits, rng))
            oracle = CostOracle(cost_fn, n_bits, eps)
            result = grover_search(oracle, GroverConfig(
                n_qubits=n_bits, max_restarts=max_restarts,
                seed=int(rng.integers(2 ** 31))))
            if not result.measured_good:
                raise RuntimeError(
                    f"block {i}: no mask below epsilon {eps} within "
                    f"{max_restarts} restarts"
                )
            report.bits = result.bits
            report.oracle_calls = result.oracle_calls
            report.epsilon = eps
        else:
            h = DiagonalCostHamiltonian(n_bits, costs)
            if backend is Backend.QAOA:
                qres = variational.qaoa_optimize(
                    h, qaoa_blocks, optimizer_budget, int(rng.integers(2 ** 31)))
                state = variational.qaoa_state(h, qres.best_params)
            else:
                ares = anneal_mod.anneal(
                    h, anneal_mod.AnnealSchedule(anneal_time, anneal_steps))
                state = ares.final_state
            best = int(np.argmax(state.probabilities()))
            report.bits = index_to_bits(best, n_bits).astype(np.uint8)

        report.loss = float(cost_fn(report.bits))
        report.gap = report.loss - exhaustive_min
        masks.append(masknet.flat_mask(block, report.bits))
        reports.append(report)

        # Chain: next block sees this block's compressed masked output (or
        # the teacher's own activations in the comparison variant).
        if chaining is Chaining.STUDENT:
            view = masknet.apply_flat_mask(block, masks[-1])
            out = masknet.forward_batch(view, inputs)
            block_inputs = compress(out, teacher_acts.shape[1], mode)
        else:
            block_inputs = teacher_acts
    return DistillResult(masks, reports)


# ---------------------------------------------------------------------------
# Persistence: selected block masks as hex bitstrings with layout tables.

def masks_to_json(masks: list[masknet.FlatMask]) -> dict:
    return {
        "blocks": [
            {
                "n_bits": len(m),
                "bits_hex": format(int(np.dot(m.bits, 1 << np.arange(len(m)))), "x"),
                "layout": [list(entry) for entry in m.layout],
            }
            for m in masks
        ]
    }


def masks_from_json(doc: dict) -> list[masknet.FlatMask]:
    out = []
    for block in doc["blocks"]:
        n = block["n_bits"]
        value = int(block["bits_hex"], 16)
        bits = index_to_bits(value, n).astype(np.uint8)
        layout = tuple(tuple(entry) for entry in block["layout"])
        out.append(masknet.FlatMask(bits, layout))
    return out


def save_selected_masks(masks: list[masknet.FlatMask], path) -> None:
    Path(path).write_text(json.dumps(masks_to_json(masks), indent=2))


def load_selected_masks(path) -> list[masknet.FlatMask]:
    return masks_from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Reference teacher for tests and demos: a least-squares fit wrapped as a
# single identity layer.

def fit_identity_teacher(data: Dataset) -> MaskedNetwork:
    x = np.hstack([data.inputs, np.ones((len(data), 1))])
    coef, *_ = np.linalg.lstsq(x, data.targets, rcond=None)
    weights = coef[:-1]
    bias = coef[-1]
    spec = LayerSpec(weights.shape[0], weights.shape[1], Activation.IDENTITY)
    return masknet.network_from_weights([spec], [weights], [bias])
