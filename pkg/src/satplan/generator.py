"""Seeded benchmark instance families.

A class is (size, phase): size is the number of tests, phase scales the
thermal capacities (hot campaigns may keep more of a scope powered than
cold ones).  Units number a quarter of the tests, rounded half-up and
then up to a whole number of equally sized scopes.  Every test draws
one unit from each of two (large classes: two or three) distinct
scopes, and a repair pass swaps units into tests so no unit goes
untested.  The generator is deterministic: the RNG is seeded from a
digest of the instance name, so g-80-hot-3 is the same instance
everywhere.
"""

from __future__ import annotations

import hashlib
import math
import random
from collections import Counter

from .instance import Instance, ThermalConstraint

SIZES = (30, 50, 80, 100, 200, 300)
PHASES = ("hot", "cold")
_SCOPE_COUNT = {30: 3, 50: 3, 80: 5, 100: 5, 200: 5, 300: 5}
_RATIO = {"hot": 0.6, "cold": 0.4}


def _half_up(x: float) -> int:
    return math.floor(x + 0.5)


def instance_name(size: int, phase: str, seed: int) -> str:
    return f"g-{size}-{phase}-{seed}"


def generate(size: int, phase: str, seed: int) -> Instance:
    if size not in _SCOPE_COUNT:
        raise ValueError(f"size must be one of {SIZES}, got {size}")
    if phase not in _RATIO:
        raise ValueError(f"phase must be one of {PHASES}, got {phase}")
    name = instance_name(size, phase, seed)
    rng = random.Random(int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:16], "big"))

    k = _SCOPE_COUNT[size]
    m = _half_up(size / 4)
    if m % k:
        m += k - m % k
    q = m // k
    cap = max(1, _half_up(_RATIO[phase] * q))
    thermal = tuple(
        ThermalConstraint(frozenset(range(c * q, (c + 1) * q)), cap) for c in range(k)
    )

    tests: list[frozenset[int]] = []
    for _ in range(size):
        nsc = 2 if size <= 50 else rng.choice((2, 3))
        chosen = rng.sample(range(k), nsc)
        tests.append(frozenset(c * q + rng.randrange(q) for c in chosen))

    # repair pass: swap redundantly used units out so every unit is tested
    usage = Counter(u for e in tests for u in e)
    for u in range(m):
        if usage[u]:
            continue
        c = u // q
        for t, e in enumerate(tests):
            spare = [v for v in e if v // q == c and usage[v] >= 2]
            if spare:
                v = min(spare)
                tests[t] = (e - {v}) | {u}
                usage[v] -= 1
                usage[u] += 1
                break
        else:
            raise RuntimeError(f"could not make unit {u + 1} tested in {name}")
    return Instance(name, m, tuple(tests), thermal)
