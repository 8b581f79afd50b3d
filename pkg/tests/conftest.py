"""Shared helpers: planted-subnetwork tasks with controllable solution counts."""
from __future__ import annotations

import numpy as np

from qns import masknet, oracle


def make_planted_task(layers, seed, n_samples=16, density=0.5, input_range=1.0):
    """Network + dataset whose targets come from a hidden mask (zero-loss plant)."""
    net_seed, mask_seed, data_seed = np.random.SeedSequence(seed).generate_state(3)
    net = masknet.init_network(layers, int(net_seed))
    rng = np.random.default_rng(int(mask_seed))
    bits = (rng.random(net.total_maskable()) < density).astype(np.uint8)
    hidden = masknet.flat_mask(net, bits)
    data = masknet.make_planted_dataset(net, hidden, n_samples, int(data_seed),
                                        input_range=input_range)
    return net, data, hidden


def planted_oracle(layers, seed, epsilon, n_samples=16):
    net, data, _ = make_planted_task(layers, seed, n_samples)
    return oracle.SubnetworkOracle(net, data, epsilon)


def planted_oracle_with_k(layers, k_target, epsilon, base_seed=0, n_samples=16):
    """First seed at or after ``base_seed`` whose task has exactly k solutions."""
    seed = base_seed
    while True:
        o = planted_oracle(layers, seed, epsilon, n_samples)
        if int(o.marked_table().sum()) == k_target:
            return o, seed
        seed += 1
        if seed - base_seed > 500:
            raise RuntimeError(f"no task with k={k_target} near seed {base_seed}")


LAYERS_6BIT = ((2, 2, "relu"), (2, 1, "identity"))
LAYERS_8BIT = ((2, 2, "relu"), (2, 2, "identity"))
