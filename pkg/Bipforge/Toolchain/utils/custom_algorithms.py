"""
Combinatorial helpers and the pinned random generator of the toolchain.
Kept free of model types so they can be tested on plain values.
"""

from itertools import combinations, product
from typing import Iterator, List, Sequence, Tuple, TypeVar

T = TypeVar('T')

MASK64 = (1 << 64) - 1


# ============================================================================
# ALGORITHM 1: SUBSET ENUMERATION
# ============================================================================

def non_empty_subsets(items: Sequence[T], max_size: int = None) -> Iterator[Tuple[T, ...]]:
    """
    Yield every non-empty subset of `items`, smallest first.

    Subsets keep the order of `items`, so a sorted input gives sorted
    subsets.

    Time Complexity: O(2^n) subsets
    """
    limit = len(items) if max_size is None else min(max_size, len(items))
    for size in range(1, limit + 1):
        yield from combinations(items, size)


def product_of_combinations(groups: Sequence[Tuple[Sequence[T], int]]) -> Iterator[Tuple[T, ...]]:
    """
    For groups [(items_1, k_1), ..., (items_r, k_r)] yield every way of
    picking a k_i-subset of each items_i, flattened into one tuple.

    The number of results is the product of the binomials C(|items_i|, k_i).
    """
    choices = [list(combinations(items, k)) for items, k in groups]
    for picked in product(*choices):
        yield tuple(x for chunk in picked for x in chunk)


# ============================================================================
# ALGORITHM 2: SPLITMIX64 SEED EXPANSION
# ============================================================================

class SplitMix64:
    """
    SplitMix64 generator. Used only to expand one user seed into the state
    words of the main generator.
    """

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


# ============================================================================
# ALGORITHM 3: XOSHIRO256** (pinned 64-bit PRNG)
# ============================================================================

def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    """
    xoshiro256** generator seeded through SplitMix64.

    Written out by hand so that traces stay byte-identical across Python
    versions and platforms.
    """

    def __init__(self, seed: int):
        expander = SplitMix64(seed)
        self.s: List[int] = [expander.next() for _ in range(4)]

    def next(self) -> int:
        s = self.s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64

        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]

        s[2] ^= t
        s[3] = _rotl(s[3], 45)

        return result

    def below(self, bound: int) -> int:
        """
        Uniform integer in [0, bound) by rejection sampling.
        """
        if bound <= 0:
            raise ValueError("bound must be positive")
        # largest multiple of bound that fits in 64 bits
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            value = self.next()
            if value < limit:
                return value % bound


# ============================================================================
# EXPORTS
# ============================================================================

__all__ = [
    'non_empty_subsets',
    'product_of_combinations',
    'SplitMix64',
    'Xoshiro256',
]
