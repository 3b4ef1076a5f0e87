"""Block mappings: which fading block carries each protograph column."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .protograph import BaseGraph, RateSelection

PUNCTURED = None


class MappingError(ValueError):
    pass


@dataclass(frozen=True)
class BlockMapping:
    """``assign[i]`` is the block of active column ``i``, or ``None`` if punctured."""

    assign: tuple[int | None, ...]
    num_blocks: int = 2
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "assign", tuple(self.assign))
        for i, b in enumerate(self.assign):
            if b is not None and not 0 <= b < self.num_blocks:
                raise MappingError(f"column {i}: block {b} not in [0, {self.num_blocks})")

    def __len__(self) -> int:
        return len(self.assign)

    def __getitem__(self, col: int) -> int | None:
        return self.assign[col]

    @property
    def transmitted(self) -> list[int]:
        return [i for i, b in enumerate(self.assign) if b is not None]

    def populations(self) -> list[int]:
        counts = [0] * self.num_blocks
        for b in self.assign:
            if b is not None:
                counts[b] += 1
        return counts

    def is_balanced(self) -> bool:
        pops = self.populations()
        return max(pops) - min(pops) <= 1

    def relabel(self, perm: Sequence[int]) -> "BlockMapping":
        """Block ``b`` becomes ``perm[b]``."""
        return BlockMapping(tuple(None if b is None else perm[b] for b in self.assign), self.num_blocks)

    def with_block(self, col: int, block: int | None) -> "BlockMapping":
        assign = list(self.assign)
        assign[col] = block
        return BlockMapping(tuple(assign), self.num_blocks)

    def check(self, bg: BaseGraph, sel: RateSelection) -> None:
        """Raise unless this mapping covers exactly the selection's transmitted columns."""
        if len(self.assign) != sel.active_cols:
            raise MappingError(f"mapping has {len(self.assign)} columns, selection has {sel.active_cols}")
        for i, b in enumerate(self.assign):
            punct = i in bg.punctured_cols
            if punct and b is not None:
                raise MappingError(f"punctured column {i} must not carry a block")
            if not punct and b is None:
                raise MappingError(f"unmapped transmitted column {i}")

    @classmethod
    def from_transmitted_sets(cls, sel: RateSelection, blocks: Sequence[Iterable[int]]) -> "BlockMapping":
        """Build from per-block sets of *transmitted* positions (``0`` = first transmitted column)."""
        assign: list[int | None] = [None] * sel.active_cols
        for b, positions in enumerate(blocks):
            for t in positions:
                col = sel.transmitted_cols[t]
                if assign[col] is not None:
                    raise MappingError(f"transmitted position {t} listed twice")
                assign[col] = b
        missing = [t for t, c in enumerate(sel.transmitted_cols) if assign[c] is None]
        if missing:
            raise MappingError(f"transmitted positions without a block: {missing}")
        return cls(tuple(assign), len(blocks))


def format_mapping(mapping: BlockMapping, meta: dict | None = None) -> str:
    info = {"blocks": mapping.num_blocks}
    info.update(mapping.meta)
    info.update(meta or {})
    lines = [f"# {key}={value}" for key, value in info.items()]
    for i, b in enumerate(mapping.assign):
        lines.append(f"v{i} {'P' if b is None else b}")
    return "\n".join(lines) + "\n"


def parse_mapping(text: str) -> BlockMapping:
    meta: dict[str, str] = {}
    assign: dict[int, int | None] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                meta[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 2 or not parts[0].startswith("v"):
            raise MappingError(f"line {lineno}: expected 'v<index> <block|P>'")
        try:
            idx = int(parts[0][1:])
            block = None if parts[1] == "P" else int(parts[1])
        except ValueError:
            raise MappingError(f"line {lineno}: bad entry {line!r}") from None
        if idx in assign:
            raise MappingError(f"line {lineno}: column {idx} assigned twice")
        assign[idx] = block
    if sorted(assign) != list(range(len(assign))):
        raise MappingError("mapping columns must be 0 .. n-1 without gaps")
    blocks = int(meta.pop("blocks", 0)) or 1 + max((b for b in assign.values() if b is not None), default=1)
    return BlockMapping(tuple(assign[i] for i in range(len(assign))), blocks, meta)


def load_mapping(path: str | Path) -> BlockMapping:
    return parse_mapping(Path(path).read_text(encoding="utf-8"))


def save_mapping(mapping: BlockMapping, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(format_mapping(mapping, meta), encoding="utf-8")
