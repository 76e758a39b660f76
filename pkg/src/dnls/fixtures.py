"""Reproducible potential pairs used by tests, benchmarks and ``dnls verify``."""

from __future__ import annotations

import numpy as np

from .boundstates import BoundStateTriplet, TripletBlock
from .lattice import PotentialPair

SUPPORT = (-4, 4)
AMPLITUDE = 0.2
P3_SEED = 3


def random_pair(
    seed: int | np.random.Generator,
    support: tuple[int, int] = SUPPORT,
    amplitude: float = AMPLITUDE,
    kind: str = "qr",
) -> PotentialPair:
    """Complex values with modulus at most ``amplitude`` on the sites of ``support``.

    Small amplitudes keep the pair admissible and free of bound states.
    """
    rng = np.random.default_rng(seed)
    lo, hi = support
    size = hi - lo + 1

    def draw():
        return amplitude * rng.uniform(0, 1, size) * np.exp(2j * np.pi * rng.uniform(0, 1, size))

    return PotentialPair(kind, lo, draw(), draw())


def p3() -> PotentialPair:
    """The reference random compact qr pair."""
    return random_pair(P3_SEED)


def zero_pair(kind: str = "qr") -> PotentialPair:
    return PotentialPair.zeros(kind, 0, 0)


def roundtrip_pairs(seed: int = 0, count: int = 20) -> list[PotentialPair]:
    """``count`` independent random pairs derived from one seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [random_pair(np.random.default_rng(c)) for c in children]


def one_soliton() -> tuple[BoundStateTriplet, BoundStateTriplet]:
    """z = 0.5 inside, zbar = 2 outside, unit norming constants."""
    return BoundStateTriplet.simple("inside", [0.5], [1.0]), BoundStateTriplet.simple("outside", [2.0], [1.0])


def two_soliton() -> tuple[BoundStateTriplet, BoundStateTriplet]:
    z2 = 0.7 + 0.14j
    return (
        BoundStateTriplet.simple("inside", [0.5, z2], [1.0, 0.5]),
        BoundStateTriplet.simple("outside", [2.0, 1 / z2], [1.0, 0.5]),
    )


def jordan_soliton() -> tuple[BoundStateTriplet, BoundStateTriplet]:
    """One double pole on each side: z = 0.7 and zbar = 1/0.7 with row [0.2, 0.5]."""
    row = np.array([0.2, 0.5])
    return (
        BoundStateTriplet("inside", (TripletBlock(0.7, row),)),
        BoundStateTriplet("outside", (TripletBlock(1 / 0.7, row),)),
    )


SOLITON_FAMILIES = {"one": one_soliton, "two": two_soliton, "jordan": jordan_soliton}
