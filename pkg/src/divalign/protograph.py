"""Protograph base graphs, 5G-NR base-graph loading and rate selection.

A base graph is stored sparsely: ``entries[(row, col)]`` holds an
:class:`EdgeSpec` with the number of parallel protograph edges and one
circulant shift per edge.  Columns ``0 .. info_cols-1`` are information
columns, the rest are parity columns in IR extension order.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np


class BaseGraphError(ValueError):
    """Raised for malformed base-graph files or violated graph invariants."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class EdgeSpec:
    """Protograph entry: ``multiplicity`` parallel edges with their shifts."""

    multiplicity: int
    shifts: tuple[int, ...]

    def __post_init__(self):
        if self.multiplicity < 1:
            raise BaseGraphError("edge multiplicity must be >= 1")
        if len(self.shifts) != self.multiplicity:
            raise BaseGraphError("number of shifts must equal multiplicity")


@dataclass(frozen=True)
class BaseGraph:
    rows: int
    cols: int
    info_cols: int
    entries: Mapping[tuple[int, int], EdgeSpec]
    punctured_cols: tuple[int, ...] = ()
    lifting_size: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "entries", MappingProxyType(dict(sorted(self.entries.items()))))
        object.__setattr__(self, "punctured_cols", tuple(sorted(set(self.punctured_cols))))
        _validate(self)

    def __reduce__(self):
        return (BaseGraph, (self.rows, self.cols, self.info_cols, dict(self.entries), self.punctured_cols,
                            self.lifting_size, self.name))

    @property
    def parity_cols(self) -> int:
        return self.cols - self.info_cols

    def row_neighbors(self, row: int, active_cols: int | None = None) -> list[int]:
        """Columns adjacent to ``row``, one entry per parallel edge."""
        limit = self.cols if active_cols is None else active_cols
        out = []
        for (j, i), spec in self.entries.items():
            if j == row and i < limit:
                out.extend([i] * spec.multiplicity)
        return out

    def adjacency(self, active_rows: int | None = None, active_cols: int | None = None) -> np.ndarray:
        """Dense ``rows x cols`` multiplicity matrix restricted to the active prefix."""
        nr = self.rows if active_rows is None else active_rows
        nc = self.cols if active_cols is None else active_cols
        mat = np.zeros((nr, nc), dtype=np.int64)
        for (j, i), spec in self.entries.items():
            if j < nr and i < nc:
                mat[j, i] = spec.multiplicity
        return mat

    def same_structure(self, other: "BaseGraph") -> bool:
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.info_cols == other.info_cols
            and self.punctured_cols == other.punctured_cols
            and self.lifting_size == other.lifting_size
            and dict(self.entries) == dict(other.entries)
        )


def _validate(bg: BaseGraph) -> None:
    if not 0 < bg.info_cols < bg.cols:
        raise BaseGraphError(f"info_cols must satisfy 0 < info_cols < cols (got {bg.info_cols}, {bg.cols})")
    if bg.rows != bg.cols - bg.info_cols:
        raise BaseGraphError(f"rows must equal cols - info_cols (got rows={bg.rows})")
    if bg.lifting_size < 1:
        raise BaseGraphError("lifting size must be positive")
    for c in bg.punctured_cols:
        if not 0 <= c < bg.cols:
            raise BaseGraphError(f"punctured column {c} out of range")
    row_seen = [False] * bg.rows
    col_seen = [False] * bg.cols
    for (j, i), spec in bg.entries.items():
        if not (0 <= j < bg.rows and 0 <= i < bg.cols):
            raise BaseGraphError(f"entry ({j}, {i}) outside {bg.rows}x{bg.cols} base graph")
        for s in spec.shifts:
            if not 0 <= s < bg.lifting_size:
                raise BaseGraphError(f"shift {s} at ({j}, {i}) not in [0, {bg.lifting_size})")
        if len(set(spec.shifts)) != len(spec.shifts):
            raise BaseGraphError(f"repeated shift at ({j}, {i}) cancels over GF(2)")
        row_seen[j] = col_seen[i] = True
    for i, seen in enumerate(col_seen):
        if not seen:
            raise BaseGraphError(f"disconnected VN: column {i} has no edges")
    for j, seen in enumerate(row_seen):
        if not seen:
            raise BaseGraphError(f"disconnected CN: row {j} has no edges")


# ---------------------------------------------------------------------------
# file format

def parse_base_graph(text: str, lifting_size: int, name: str = "") -> BaseGraph:
    """Parse the text base-graph format.

    Header ``bg <rows> <cols> <info_cols> <punctured>`` (``-`` for none), then
    one ``j i shift[,shift...]`` line per nonzero entry.  ``#`` starts a
    comment.  A trailing ``# sha256 <hex>`` line, if present, must match the
    digest of every byte before it.
    """
    lines = text.splitlines(keepends=True)
    for lineno, raw in enumerate(lines, 1):
        stripped = raw.strip()
        if stripped.startswith("# sha256 "):
            expected = stripped.split()[2]
            body = "".join(lines[: lineno - 1])
            actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
            if actual != expected:
                raise BaseGraphError(f"checksum mismatch (expected {expected[:12]}..., got {actual[:12]}...)", lineno)

    header = None
    entries: dict[tuple[int, int], EdgeSpec] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if parts[0] != "bg" or len(parts) not in (4, 5):
                raise BaseGraphError("expected header 'bg <rows> <cols> <info_cols> <punctured>'", lineno)
            try:
                rows, cols, info = (int(p) for p in parts[1:4])
                punct_field = parts[4] if len(parts) == 5 else "-"
                punct = () if punct_field == "-" else tuple(int(p) for p in punct_field.split(","))
            except ValueError as exc:
                raise BaseGraphError(f"bad header: {exc}", lineno) from None
            header = (rows, cols, info, punct)
            continue
        if len(parts) != 3:
            raise BaseGraphError("expected 'j i shift[,shift...]'", lineno)
        try:
            j, i = int(parts[0]), int(parts[1])
            shifts = tuple(int(s) for s in parts[2].split(","))
        except ValueError as exc:
            raise BaseGraphError(f"bad edge line: {exc}", lineno) from None
        if (j, i) in entries:
            raise BaseGraphError(f"duplicate entry ({j}, {i})", lineno)
        entries[(j, i)] = EdgeSpec(len(shifts), shifts)
    if header is None:
        raise BaseGraphError("missing header")
    rows, cols, info, punct = header
    return BaseGraph(rows, cols, info, entries, punct, lifting_size, name)


def format_base_graph(bg: BaseGraph, checksum: bool = True) -> str:
    punct = ",".join(str(c) for c in bg.punctured_cols) or "-"
    out = [f"bg {bg.rows} {bg.cols} {bg.info_cols} {punct}\n"]
    for (j, i), spec in bg.entries.items():
        out.append(f"{j} {i} {','.join(str(s) for s in spec.shifts)}\n")
    body = "".join(out)
    if checksum:
        body += f"# sha256 {hashlib.sha256(body.encode('utf-8')).hexdigest()}\n"
    return body


def load_base_graph(path: str | Path, lifting_size: int) -> BaseGraph:
    path = Path(path)
    bg = parse_base_graph(path.read_text(encoding="utf-8"), lifting_size, name=path.stem)
    _check_5g_dims(bg)
    return bg


def save_base_graph(bg: BaseGraph, path: str | Path) -> None:
    Path(path).write_text(format_base_graph(bg), encoding="utf-8")


_5G_DIMS = {"bg1": (46, 68, 22), "bg2": (42, 52, 10)}
_5G_FILES = {"bg1": ("bg1_z240.txt", 240), "bg2": ("bg2_z20.txt", 20)}


def _check_5g_dims(bg: BaseGraph) -> None:
    """Base graphs named after a 5G-NR graph must have its dimensions."""
    key = bg.name.lower()[:3]
    if key not in _5G_DIMS:
        return
    if (bg.rows, bg.cols, bg.info_cols) != _5G_DIMS[key]:
        raise BaseGraphError(f"{key.upper()} must be {_5G_DIMS[key]}, got {(bg.rows, bg.cols, bg.info_cols)}")
    if any(spec.multiplicity != 1 for spec in bg.entries.values()):
        raise BaseGraphError(f"{key.upper()} entries must have multiplicity 1")
    if bg.punctured_cols != (0, 1):
        raise BaseGraphError(f"{key.upper()} punctures columns 0 and 1")


def data_path(filename: str) -> Path:
    return Path(str(resources.files("divalign") / "data" / filename))


def bundled_base_graph(name: str) -> BaseGraph:
    """The shipped 5G-NR base graph ``"bg1"`` (Z=240) or ``"bg2"`` (Z=20)."""
    key = name.lower()
    if key not in _5G_FILES:
        raise KeyError(f"unknown base graph {name!r}; expected 'bg1' or 'bg2'")
    filename, z = _5G_FILES[key]
    return load_base_graph(data_path(filename), z)


# ---------------------------------------------------------------------------
# rate selection

@dataclass(frozen=True)
class RateSelection:
    active_cols: int
    active_rows: int
    rate: Fraction
    transmitted_cols: tuple[int, ...] = field(default=())
    punctured_active: tuple[int, ...] = field(default=())

    @property
    def parity_cols(self) -> int:
        return self.active_rows


def select_rate(bg: BaseGraph, parity_cols: int) -> RateSelection:
    """Use the first ``parity_cols`` parity columns (and as many rows)."""
    if not 1 <= parity_cols <= bg.parity_cols:
        raise ValueError(f"parity_cols must be in [1, {bg.parity_cols}], got {parity_cols}")
    active_cols = bg.info_cols + parity_cols
    punct = tuple(c for c in bg.punctured_cols if c < active_cols)
    tx = tuple(c for c in range(active_cols) if c not in punct)
    return RateSelection(
        active_cols=active_cols,
        active_rows=parity_cols,
        rate=Fraction(bg.info_cols, len(tx)),
        transmitted_cols=tx,
        punctured_active=punct,
    )


def parity_cols_for_rate(bg: BaseGraph, rate: Fraction | str) -> int:
    """Smallest ``parity_cols`` whose rate does not exceed ``rate``."""
    target = Fraction(rate)
    for p in range(1, bg.parity_cols + 1):
        if select_rate(bg, p).rate <= target:
            return p
    raise ValueError(f"no parity extension reaches rate <= {target}")


def active_neighborhoods(bg: BaseGraph, sel: RateSelection) -> list[frozenset[int]]:
    nbrs: list[set[int]] = [set() for _ in range(sel.active_cols)]
    for (j, i) in bg.entries:
        if j < sel.active_rows and i < sel.active_cols:
            nbrs[i].add(j)
    return [frozenset(s) for s in nbrs]


def identical_neighborhood_pairs(bg: BaseGraph, sel: RateSelection) -> list[tuple[int, int]]:
    """Unordered active-column pairs ``(a, b)``, ``a < b``, with equal CN sets."""
    groups: dict[frozenset[int], list[int]] = {}
    for col, nb in enumerate(active_neighborhoods(bg, sel)):
        groups.setdefault(nb, []).append(col)
    pairs = []
    for cols in groups.values():
        pairs.extend(itertools.combinations(cols, 2))
    return sorted(pairs)


def singleton_bound(num_blocks: int, rate: Fraction | int | str) -> int:
    """Singleton-like bound ``1 + floor(M (1 - R))`` with exact rationals."""
    r = Fraction(rate)
    if num_blocks < 1 or not 0 < r <= 1:
        raise ValueError("need M >= 1 and 0 < rate <= 1")
    return 1 + math.floor(num_blocks * (1 - r))


def from_dense(matrix: Iterable[Iterable[int]], info_cols: int, punctured: Iterable[int] = (),
               lifting_size: int = 1, name: str = "") -> BaseGraph:
    """Build a base graph from a multiplicity matrix; shifts are ``0, 1, ...``."""
    mat = np.asarray(matrix, dtype=np.int64)
    entries = {}
    for j, i in zip(*np.nonzero(mat)):
        mult = int(mat[j, i])
        entries[(int(j), int(i))] = EdgeSpec(mult, tuple(range(mult)))
    z = max(lifting_size, int(mat.max(initial=1)))
    return BaseGraph(mat.shape[0], mat.shape[1], info_cols, entries, tuple(punctured), z, name)
