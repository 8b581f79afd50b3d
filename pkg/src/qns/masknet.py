"""Fixed-random-weight feed-forward networks with binary masks.

The weights of a :class:`MaskedNetwork` are drawn once and never tuned;
training means choosing which weights stay active, via per-layer binary
masks or a :class:`FlatMask` bitstring that other modules search over.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .bitstrings import index_to_bits

BIAS_ROW = -1


class Activation(str, Enum):
    RELU = "relu"
    IDENTITY = "identity"


@dataclass(frozen=True)
class LayerSpec:
    fan_in: int
    fan_out: int
    activation: Activation = Activation.RELU

    def __post_init__(self):
        if self.fan_in < 1 or self.fan_out < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.fan_in}x{self.fan_out}")
        object.__setattr__(self, "activation", Activation(self.activation))


@dataclass
class Dataset:
    """Paired input/target rows; both are 2-d float arrays."""

    inputs: np.ndarray
    targets: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=np.float64))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=np.float64))
        if len(self.inputs) != len(self.targets):
            raise ValueError(
                f"{len(self.inputs)} inputs vs {len(self.targets)} targets"
            )

    def __len__(self) -> int:
        return len(self.inputs)


class MaskedNetwork:
    """Immutable random weights plus mutable per-layer binary masks."""

    def __init__(self, specs, weights, biases, masks, seed=None,
                 bias_masks=None, mask_biases=False):
        self.specs = tuple(specs)
        self.weights = list(weights)
        self.biases = list(biases)
        self.masks = list(masks)
        self.seed = seed
        self.mask_biases = mask_biases
        if bias_masks is None:
            bias_masks = [np.ones_like(b) for b in self.biases]
        self.bias_masks = list(bias_masks)
        self._validate()
        for w in self.weights:
            w.setflags(write=False)

    def _validate(self):
        if not self.specs:
            raise ValueError("network needs at least one layer")
        for i in range(len(self.specs) - 1):
            if self.specs[i].fan_out != self.specs[i + 1].fan_in:
                raise ValueError(
                    f"layer {i} fan_out {self.specs[i].fan_out} does not feed "
                    f"layer {i + 1} fan_in {self.specs[i + 1].fan_in}"
                )
        if self.specs[-1].activation is not Activation.IDENTITY:
            raise ValueError("final layer must use the identity activation")
        for i, spec in enumerate(self.specs):
            shape = (spec.fan_in, spec.fan_out)
            if self.weights[i].shape != shape:
                raise ValueError(f"layer {i} weight shape {self.weights[i].shape} != {shape}")
            if self.masks[i].shape != shape:
                raise ValueError(f"layer {i} mask shape {self.masks[i].shape} != {shape}")
            if self.biases[i].shape != (spec.fan_out,):
                raise ValueError(f"layer {i} bias shape {self.biases[i].shape}")
            if not np.all((self.masks[i] == 0) | (self.masks[i] == 1)):
                raise ValueError(f"layer {i} mask has entries outside {{0, 1}}")

    @property
    def depth(self) -> int:
        return len(self.specs)

    @property
    def input_dim(self) -> int:
        return self.specs[0].fan_in

    @property
    def output_dim(self) -> int:
        return self.specs[-1].fan_out

    def total_maskable(self) -> int:
        n = sum(s.fan_in * s.fan_out for s in self.specs)
        if self.mask_biases:
            n += sum(s.fan_out for s in self.specs)
        return n


def init_network(specs, seed, mask_biases: bool = False) -> MaskedNetwork:
    """Fresh network: weights uniform in +-1/sqrt(fan_in), zero biases, all-ones masks."""
    specs = tuple(s if isinstance(s, LayerSpec) else LayerSpec(*s) for s in specs)
    rng = np.random.default_rng(seed)
    weights, biases, masks = [], [], []
    for spec in specs:
        bound = 1.0 / math.sqrt(spec.fan_in)
        weights.append(rng.uniform(-bound, bound, size=(spec.fan_in, spec.fan_out)))
        biases.append(np.zeros(spec.fan_out))
        masks.append(np.ones((spec.fan_in, spec.fan_out)))
    return MaskedNetwork(specs, weights, biases, masks, seed=seed,
                         mask_biases=mask_biases)


def network_from_weights(specs, weights, biases=None, seed=None) -> MaskedNetwork:
    """Wrap explicit weight matrices (e.g. a trained teacher) as a MaskedNetwork."""
    specs = tuple(s if isinstance(s, LayerSpec) else LayerSpec(*s) for s in specs)
    weights = [np.array(w, dtype=np.float64) for w in weights]
    if biases is None:
        biases = [np.zeros(s.fan_out) for s in specs]
    else:
        biases = [np.array(b, dtype=np.float64) for b in biases]
    masks = [np.ones_like(w) for w in weights]
    return MaskedNetwork(specs, weights, biases, masks, seed=seed)


def forward(net: MaskedNetwork, x) -> np.ndarray:
    """Evaluate one input vector through the masked network."""
    return forward_batch(net, np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]


def forward_batch(net: MaskedNetwork, xs: np.ndarray) -> np.ndarray:
    """Evaluate a (samples, fan_in) batch; returns (samples, fan_out)."""
    if xs.shape[1] != net.input_dim:
        raise ValueError(f"input dim {xs.shape[1]} != network fan_in {net.input_dim}")
    z = xs
    for i, spec in enumerate(net.specs):
        b = net.biases[i] * net.bias_masks[i] if net.mask_biases else net.biases[i]
        z = z @ (net.masks[i] * net.weights[i]) + b
        if spec.activation is Activation.RELU:
            z = np.maximum(z, 0.0)
    return z


def dataset_loss(net: MaskedNetwork, data: Dataset) -> float:
    """Mean L2 distance between predictions and targets."""
    if len(data) == 0:
        raise ValueError("dataset is empty")
    preds = forward_batch(net, data.inputs)
    return float(np.mean(np.linalg.norm(preds - data.targets, axis=1)))


# ---------------------------------------------------------------------------
# Flat masks: one bitstring covering every maskable parameter.

@dataclass(frozen=True)
class FlatMask:
    """Bitstring over all maskable parameters plus the bit -> (layer, row, col) map.

    Row ``BIAS_ROW`` addresses a bias entry (only present when the owning
    network masks biases). The layout is a bijection: bit j <-> layout[j].
    """

    bits: np.ndarray
    layout: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1 or bits.size != len(self.layout):
            raise ValueError(
                f"{bits.size} bits do not match layout of size {len(self.layout)}"
            )
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("mask bits must be 0 or 1")
        if len(set(self.layout)) != len(self.layout):
            raise ValueError("layout entries must be distinct (bit -> parameter bijection)")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return self.bits.size


def mask_layout(net: MaskedNetwork) -> tuple[tuple[int, int, int], ...]:
    """Bit order: layer by layer, weights row-major, then biases if masked."""
    entries = []
    for layer, spec in enumerate(net.specs):
        for row in range(spec.fan_in):
            for col in range(spec.fan_out):
                entries.append((layer, row, col))
    if net.mask_biases:
        for layer, spec in enumerate(net.specs):
            for col in range(spec.fan_out):
                entries.append((layer, BIAS_ROW, col))
    return tuple(entries)


def flat_mask(net: MaskedNetwork, bits) -> FlatMask:
    return FlatMask(np.asarray(bits, dtype=np.uint8), mask_layout(net))


def flat_mask_from_index(net: MaskedNetwork, index: int) -> FlatMask:
    return flat_mask(net, index_to_bits(index, net.total_maskable()))


def apply_flat_mask(net: MaskedNetwork, m: FlatMask) -> MaskedNetwork:
    """Masked view of ``net``: shares the frozen weights, owns fresh masks."""
    n = net.total_maskable()
    if len(m) != n:
        raise ValueError(f"mask has {len(m)} bits, network has {n} maskable parameters")
    masks = [np.ones((s.fan_in, s.fan_out)) for s in net.specs]
    bias_masks = [np.ones(s.fan_out) for s in net.specs]
    for bit, (layer, row, col) in zip(m.bits, m.layout):
        if row == BIAS_ROW:
            bias_masks[layer][col] = float(bit)
        else:
            masks[layer][row, col] = float(bit)
    view = MaskedNetwork.__new__(MaskedNetwork)
    view.specs = net.specs
    view.weights = net.weights
    view.biases = net.biases
    view.masks = masks
    view.bias_masks = bias_masks
    view.seed = net.seed
    view.mask_biases = net.mask_biases
    return view


# ---------------------------------------------------------------------------
# Persistence.

def network_to_json(net: MaskedNetwork, include_arrays: bool = True) -> dict:
    doc = {
        "specs": [
            {"fan_in": s.fan_in, "fan_out": s.fan_out, "activation": s.activation.value}
            for s in net.specs
        ],
        "seed": net.seed,
        "mask_biases": net.mask_biases,
    }
    if include_arrays:
        doc["weights"] = [w.tolist() for w in net.weights]
        doc["biases"] = [b.tolist() for b in net.biases]
        doc["masks"] = [m.tolist() for m in net.masks]
    return doc


def network_from_json(doc: dict) -> MaskedNetwork:
    specs = tuple(
        LayerSpec(s["fan_in"], s["fan_out"], Activation(s["activation"]))
        for s in doc["specs"]
    )
    mask_biases = bool(doc.get("mask_biases", False))
    if "weights" in doc:
        net = network_from_weights(specs, doc["weights"], doc.get("biases"),
                                   seed=doc.get("seed"))
        net.mask_biases = mask_biases
        if "masks" in doc:
            net.masks = [np.array(m, dtype=np.float64) for m in doc["masks"]]
            net._validate()
        return net
    if doc.get("seed") is None:
        raise ValueError("network document needs explicit weights or a seed")
    return init_network(specs, doc["seed"], mask_biases=mask_biases)


def save_network(net: MaskedNetwork, path) -> None:
    Path(path).write_text(json.dumps(network_to_json(net), indent=2))


def load_network(path) -> MaskedNetwork:
    return network_from_json(json.loads(Path(path).read_text()))


def dataset_to_json(data: Dataset) -> dict:
    return {"inputs": data.inputs.tolist(), "targets": data.targets.tolist(),
            "name": data.name}


def dataset_from_json(doc: dict) -> Dataset:
    return Dataset(np.array(doc["inputs"]), np.array(doc["targets"]),
                   name=doc.get("name", ""))


def save_dataset(data: Dataset, path) -> None:
    Path(path).write_text(json.dumps(dataset_to_json(data)))


def load_dataset(path) -> Dataset:
    return dataset_from_json(json.loads(Path(path).read_text()))


def load_dataset_csv(path, n_inputs: int, name: str | None = None) -> Dataset:
    """One row = input values then target values; split after ``n_inputs`` columns."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(v) for v in row])
    arr = np.asarray(rows, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] <= n_inputs:
        raise ValueError(
            f"csv rows have {arr.shape[-1]} columns, need more than {n_inputs}"
        )
    return Dataset(arr[:, :n_inputs], arr[:, n_inputs:],
                   name=name or Path(path).stem)


def save_dataset_csv(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for x, y in zip(data.inputs, data.targets):
            writer.writerow([*x, *y])


# ---------------------------------------------------------------------------
# Synthetic benchmark: targets generated by a hidden mask, so the search
# space always contains at least one zero-loss solution.

def make_planted_dataset(net: MaskedNetwork, hidden: FlatMask, n_samples: int,
                         seed, input_range: float = 1.0) -> Dataset:
    rng = np.random.default_rng(seed)
    xs = rng.uniform(-input_range, input_range, size=(n_samples, net.input_dim))
    planted = apply_flat_mask(net, hidden)
    ys = forward_batch(planted, xs)
    return Dataset(xs, ys, name="planted")
