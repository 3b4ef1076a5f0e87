"""Circulant lifting of a rate-selected base graph, GF(2) encoding and alist export.

Circulant convention: base entry ``(j, i)`` with shift ``s`` connects lifted
row ``j*Z + r`` to lifted column ``i*Z + (r + s) % Z``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .mapping import BlockMapping
from .protograph import BaseGraph, BaseGraphError, RateSelection

NOT_TRANSMITTED = -1


class SingularParityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LiftedCode:
    Z: int
    n_rows: int
    n_cols: int
    info_len: int
    rows: tuple[tuple[int, ...], ...]
    col_to_proto: tuple[tuple[int, int], ...]
    punctured_bits: frozenset[int]

    @property
    def K(self) -> int:
        return self.info_len

    @property
    def N(self) -> int:
        """Transmitted length (punctured bits excluded)."""
        return self.n_cols - len(self.punctured_bits)

    @cached_property
    def row_ptr(self) -> np.ndarray:
        ptr = np.zeros(self.n_rows + 1, dtype=np.int64)
        np.cumsum([len(r) for r in self.rows], out=ptr[1:])
        return ptr

    @cached_property
    def edge_col(self) -> np.ndarray:
        return np.fromiter((c for r in self.rows for c in r), dtype=np.int32, count=int(self.row_ptr[-1]))

    @cached_property
    def transmitted_mask(self) -> np.ndarray:
        mask = np.ones(self.n_cols, dtype=bool)
        mask[list(self.punctured_bits)] = False
        return mask

    def dense(self) -> np.ndarray:
        H = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for r, cols in enumerate(self.rows):
            H[r, list(cols)] ^= 1
        return H

    def syndrome(self, word) -> np.ndarray:
        word = np.asarray(word, dtype=np.uint8)
        bits = word[..., self.edge_col]
        return np.bitwise_xor.reduceat(bits, self.row_ptr[:-1], axis=-1)

    def row_degrees(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def col_degrees(self) -> np.ndarray:
        return np.bincount(self.edge_col, minlength=self.n_cols)

    @cached_property
    def _encoder(self):
        return _ParityEncoder(self)

    def encode(self, info_bits) -> np.ndarray:
        return self._encoder.encode(np.asarray(info_bits, dtype=np.uint8))


def lift(bg: BaseGraph, sel: RateSelection) -> LiftedCode:
    Z = bg.lifting_size
    rows: list[list[int]] = [[] for _ in range(sel.active_rows * Z)]
    for (j, i), spec in bg.entries.items():
        if j >= sel.active_rows or i >= sel.active_cols:
            continue
        for s in spec.shifts:
            if not 0 <= s < Z:
                raise BaseGraphError(f"shift {s} at ({j}, {i}) not in [0, {Z})")
            for r in range(Z):
                rows[j * Z + r].append(i * Z + (r + s) % Z)
    col_to_proto = tuple((c // Z, c % Z) for c in range(sel.active_cols * Z))
    punct = frozenset(c * Z + r for c in sel.punctured_active for r in range(Z))
    return LiftedCode(
        Z=Z,
        n_rows=sel.active_rows * Z,
        n_cols=sel.active_cols * Z,
        info_len=bg.info_cols * Z,
        rows=tuple(tuple(sorted(r)) for r in rows),
        col_to_proto=col_to_proto,
        punctured_bits=punct,
    )


class _ParityEncoder:
    """Systematic encoder: parity = Hp^-1 (Hs u) over GF(2).

    Rows of the inverse are kept as Python ints used as bit sets.
    """

    def __init__(self, code: LiftedCode):
        K = code.info_len
        m = code.n_rows
        if code.n_cols - K != m:
            raise SingularParityError("parity part is not square")
        self.K = K
        self.code = code
        hp = []
        for cols in code.rows:
            v = 0
            for c in cols:
                if c >= K:
                    v ^= 1 << (c - K)
            hp.append(v)
        self.inverse = _gf2_inverse(hp, m)

    def encode(self, info: np.ndarray) -> np.ndarray:
        if info.shape[-1] != self.K:
            raise ValueError(f"expected {self.K} info bits, got {info.shape[-1]}")
        if info.ndim > 1:
            return np.stack([self.encode(row) for row in info])
        s = 0
        for r, cols in enumerate(self.code.rows):
            bit = 0
            for c in cols:
                if c < self.K:
                    bit ^= int(info[c])
            s |= bit << r
        parity = np.fromiter(((row & s).bit_count() & 1 for row in self.inverse), dtype=np.uint8,
                             count=len(self.inverse))
        return np.concatenate([info, parity])


def _gf2_inverse(rows: list[int], n: int) -> list[int]:
    """Invert an ``n x n`` GF(2) matrix given as int rows (bit ``c`` = column ``c``)."""
    a = list(rows)
    inv = [1 << r for r in range(n)]
    for col in range(n):
        bit = 1 << col
        pivot = next((r for r in range(col, n) if a[r] & bit), None)
        if pivot is None:
            raise SingularParityError(f"parity sub-matrix is singular (column {col})")
        a[col], a[pivot] = a[pivot], a[col]
        inv[col], inv[pivot] = inv[pivot], inv[col]
        pr, pi = a[col], inv[col]
        for r in range(n):
            if r != col and a[r] & bit:
                a[r] ^= pr
                inv[r] ^= pi
    return inv


def expand_mapping(mapping: BlockMapping, Z: int) -> np.ndarray:
    """Block index of every lifted bit; punctured bits get ``NOT_TRANSMITTED``."""
    per_col = np.array([NOT_TRANSMITTED if b is None else b for b in mapping.assign], dtype=np.int64)
    return np.repeat(per_col, Z)


def format_alist(code: LiftedCode) -> str:
    """MacKay alist text (1-based indices, zero padded to the max degree)."""
    cols: list[list[int]] = [[] for _ in range(code.n_cols)]
    for r, row in enumerate(code.rows):
        for c in row:
            cols[c].append(r)
    max_col = max(len(c) for c in cols)
    max_row = max(len(r) for r in code.rows)
    lines = [f"{code.n_cols} {code.n_rows}", f"{max_col} {max_row}",
             " ".join(str(len(c)) for c in cols), " ".join(str(len(r)) for r in code.rows)]
    for c in cols:
        lines.append(" ".join(str(x + 1) for x in c + [-1] * (max_col - len(c))))
    for r in code.rows:
        lines.append(" ".join(str(x + 1) for x in list(r) + [-1] * (max_row - len(r))))
    return "\n".join(lines) + "\n"


def parse_alist(text: str) -> np.ndarray:
    """Dense parity-check matrix from alist text."""
    nums = [int(x) for x in text.split()]
    n, m = nums[0], nums[1]
    max_col = nums[2]
    pos = 4 + n + m
    H = np.zeros((m, n), dtype=np.uint8)
    for c in range(n):
        for x in nums[pos:pos + max_col]:
            if x > 0:
                H[x - 1, c] = 1
        pos += max_col
    return H


def save_alist(code: LiftedCode, path: str | Path) -> None:
    Path(path).write_text(format_alist(code), encoding="utf-8")
