import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox stream; replications use seeds ``base + i``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def child_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent streams derived from one seed, e.g. training and evaluation."""
    return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(seed).spawn(n)]
