"""Seedable counter-based random streams, one per (seed, shot) pair."""

from typing import Optional

import numpy as np


def shot_generator(seed: int, shot: Optional[int] = None, stream: int = 0) -> np.random.Generator:
    """
    Create the generator for one shot of an ensemble.

    Every (seed, shot, stream) triple maps to an independent Philox stream,
    so results don't depend on the order in which shots are executed.
    """
    entropy = [int(seed), int(stream)] if shot is None else [int(seed), int(stream), int(shot)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
