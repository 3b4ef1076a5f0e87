"""Boolean fading functions stored as truth tables.

A function of ``M`` block indicators ``A_0 .. A_{M-1}`` is a ``2**M``-bit
integer: bit ``a`` holds ``f(a)`` where realization ``a`` has ``a_m = (a >> m) & 1``.
AND/OR of functions are bitwise AND/OR of their tables, so the same integer
ops evaluate every realization at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

MAX_BLOCKS = 16


@lru_cache(maxsize=None)
def full_mask(num_blocks: int) -> int:
    return (1 << (1 << num_blocks)) - 1


@lru_cache(maxsize=None)
def atom_table(num_blocks: int, block: int) -> int:
    """Table of the single-block indicator ``A_block``."""
    if not 0 <= block < num_blocks:
        raise ValueError(f"block {block} out of range for M={num_blocks}")
    table = 0
    for a in range(1 << num_blocks):
        if (a >> block) & 1:
            table |= 1 << a
    return table


@lru_cache(maxsize=None)
def full_diversity_table(num_blocks: int) -> int:
    """``A_0 + ... + A_{M-1}``: one everywhere except the all-faded realization."""
    return full_mask(num_blocks) & ~1


@dataclass(frozen=True)
class FadingFunction:
    num_blocks: int
    table: int

    def __post_init__(self):
        if not 1 <= self.num_blocks <= MAX_BLOCKS:
            raise ValueError(f"num_blocks must be in [1, {MAX_BLOCKS}]")
        if self.table < 0 or self.table > full_mask(self.num_blocks):
            raise ValueError("table has bits beyond 2**M")

    @classmethod
    def atom(cls, num_blocks: int, block: int) -> "FadingFunction":
        return cls(num_blocks, atom_table(num_blocks, block))

    @classmethod
    def zero(cls, num_blocks: int) -> "FadingFunction":
        return cls(num_blocks, 0)

    @classmethod
    def full_diversity(cls, num_blocks: int) -> "FadingFunction":
        return cls(num_blocks, full_diversity_table(num_blocks))

    def __call__(self, realization) -> int:
        return (self.table >> realization_index(realization)) & 1

    def __and__(self, other: "FadingFunction") -> "FadingFunction":
        return ff_and(self, other)

    def __or__(self, other: "FadingFunction") -> "FadingFunction":
        return ff_or(self, other)

    def bits(self) -> str:
        """Truth table as a string ordered by realization index ``0 .. 2**M - 1``."""
        return "".join(str((self.table >> a) & 1) for a in range(1 << self.num_blocks))

    def hex(self) -> str:
        width = max(1, (1 << self.num_blocks) // 4)
        return f"{self.table:0{width}x}"

    @property
    def diversity_order(self) -> int:
        return diversity_order(self)

    def is_full_diversity(self) -> bool:
        return is_full_diversity(self.table, self.num_blocks)

    def is_monotone(self) -> bool:
        return is_monotone(self.table, self.num_blocks)

    def dominates(self, other: "FadingFunction") -> bool:
        """Pointwise ``self >= other``."""
        _check_same(self, other)
        return other.table & ~self.table == 0


def _check_same(f: FadingFunction, g: FadingFunction) -> None:
    if f.num_blocks != g.num_blocks:
        raise ValueError(f"mismatched block counts: {f.num_blocks} vs {g.num_blocks}")


def ff_and(f: FadingFunction, g: FadingFunction) -> FadingFunction:
    _check_same(f, g)
    return FadingFunction(f.num_blocks, f.table & g.table)


def ff_or(f: FadingFunction, g: FadingFunction) -> FadingFunction:
    _check_same(f, g)
    return FadingFunction(f.num_blocks, f.table | g.table)


def realization_index(realization) -> int:
    if isinstance(realization, int):
        return realization
    return sum(int(bit) << m for m, bit in enumerate(realization))


def realization_bits(index: int, num_blocks: int) -> tuple[int, ...]:
    return tuple((index >> m) & 1 for m in range(num_blocks))


def is_full_diversity(table: int, num_blocks: int) -> bool:
    need = full_diversity_table(num_blocks)
    return table & need == need


def diversity_order_of_table(table: int, num_blocks: int) -> int:
    """Fewest faded blocks (zero bits of ``a``) among realizations with ``f(a) = 0``.

    The constant-zero function gives 0; a function that never fails gives ``M``.
    """
    best = num_blocks
    for a in range(1 << num_blocks):
        if not (table >> a) & 1:
            best = min(best, num_blocks - a.bit_count())
            if best == 0:
                break
    return best


def diversity_order(f: FadingFunction) -> int:
    return diversity_order_of_table(f.table, f.num_blocks)


def is_monotone(table: int, num_blocks: int) -> bool:
    """Raising any single indicator never turns a one into a zero."""
    for m in range(num_blocks):
        bit = 1 << m
        for a in range(1 << num_blocks):
            if not a & bit and (table >> a) & 1 and not (table >> (a | bit)) & 1:
                return False
    return True


def permute_blocks(table: int, num_blocks: int, perm) -> int:
    """Relabel blocks: the result evaluated at ``a`` equals ``table`` at ``a'``
    with ``a'_m = a_{perm[m]}``.

    Maps ``A_m`` to ``A_{perm[m]}``.
    """
    out = 0
    for a in range(1 << num_blocks):
        src = 0
        for m in range(num_blocks):
            if (a >> perm[m]) & 1:
                src |= 1 << m
        if (table >> src) & 1:
            out |= 1 << a
    return out
