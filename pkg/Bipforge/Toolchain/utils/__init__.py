from .custom_algorithms import (
    non_empty_subsets,
    product_of_combinations,
    SplitMix64,
    Xoshiro256,
)

__all__ = [
    'non_empty_subsets',
    'product_of_combinations',
    'SplitMix64',
    'Xoshiro256',
]
