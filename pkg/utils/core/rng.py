"""Deterministic random streams for replications"""

import numpy as np


def make_stream(master_seed: int, stream_id: int) -> np.random.Generator:
    """
    Independent generator for one replication.

    The stream depends only on (master_seed, stream_id), never on scheduling,
    so parallel and sequential runs draw identical numbers.
    """
    return np.random.default_rng(np.random.SeedSequence([master_seed, stream_id]))


def draw_from(distribution: dict, rng: np.random.Generator):
    """Draw a key of {outcome: probability} in the dict's iteration order"""
    outcomes = list(distribution.keys())
    if len(outcomes) == 1:
        return outcomes[0]
    probs = np.fromiter(distribution.values(), dtype=float, count=len(outcomes))
    index = rng.choice(len(outcomes), p=probs / probs.sum())
    return outcomes[index]
