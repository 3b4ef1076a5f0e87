"""Diversity evolution (DivE) over a protograph.

Messages are Boolean functions of the block indicators, held as truth tables.
CNs AND their extrinsic inputs (an empty AND is the constant one), VNs OR
their channel indicator with the extrinsic CN messages, flooding schedule.
Parallel protograph edges carry separate messages.

Iteration ``0`` is the channel initialization; iteration ``l >= 1`` is the
state after ``l`` CN/VN update rounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _backend
from .fading import (
    MAX_BLOCKS,
    FadingFunction,
    atom_table,
    diversity_order_of_table,
    full_diversity_table,
    full_mask,
    is_full_diversity,
)
from .mapping import BlockMapping
from .protograph import BaseGraph, RateSelection

DEFAULT_ITERS = 20


class DiveError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeGraph:
    """Edge-level view of the active part of a base graph.

    Edges are numbered row-major (CN ``j`` owns ``cn_ptr[j] .. cn_ptr[j+1]-1``),
    with one edge per parallel copy.
    """

    n_cn: int
    n_vn: int
    info_cols: int
    punctured: frozenset[int]
    edge_cn: np.ndarray
    edge_vn: np.ndarray
    cn_ptr: np.ndarray
    vn_ptr: np.ndarray
    vn_edges: np.ndarray

    @classmethod
    def from_base_graph(cls, bg: BaseGraph, sel: RateSelection) -> "EdgeGraph":
        cn, vn = [], []
        for (j, i), spec in bg.entries.items():
            if j < sel.active_rows and i < sel.active_cols:
                cn.extend([j] * spec.multiplicity)
                vn.extend([i] * spec.multiplicity)
        return cls.from_edges(sel.active_rows, sel.active_cols, bg.info_cols,
                              set(sel.punctured_active), cn, vn)

    @classmethod
    def from_edges(cls, n_cn, n_vn, info_cols, punctured, edge_cn, edge_vn) -> "EdgeGraph":
        edge_cn = np.asarray(edge_cn, dtype=np.int64)
        edge_vn = np.asarray(edge_vn, dtype=np.int64)
        order = np.lexsort((edge_vn, edge_cn))
        edge_cn, edge_vn = edge_cn[order], edge_vn[order]
        cn_ptr = np.zeros(n_cn + 1, dtype=np.int64)
        np.cumsum(np.bincount(edge_cn, minlength=n_cn), out=cn_ptr[1:])
        vn_ptr = np.zeros(n_vn + 1, dtype=np.int64)
        np.cumsum(np.bincount(edge_vn, minlength=n_vn), out=vn_ptr[1:])
        vn_edges = np.argsort(edge_vn, kind="stable").astype(np.int64)
        return cls(n_cn, n_vn, info_cols, frozenset(punctured), edge_cn, edge_vn, cn_ptr, vn_ptr, vn_edges)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vn)

    @cached_property
    def cn_edge_lists(self) -> list[list[int]]:
        return [list(range(self.cn_ptr[j], self.cn_ptr[j + 1])) for j in range(self.n_cn)]

    @cached_property
    def vn_edge_lists(self) -> list[list[int]]:
        return [self.vn_edges[self.vn_ptr[i]:self.vn_ptr[i + 1]].tolist() for i in range(self.n_vn)]

    @cached_property
    def cn_neighbors(self) -> list[list[int]]:
        """Distinct VNs per CN, ascending."""
        return [sorted(set(self.edge_vn[self.cn_ptr[j]:self.cn_ptr[j + 1]].tolist())) for j in range(self.n_cn)]

    @cached_property
    def vn_neighbors(self) -> list[list[int]]:
        return [sorted(set(self.edge_cn[e] for e in edges)) for edges in self.vn_edge_lists]


# ---------------------------------------------------------------------------
# table <-> word packing

def words_per_table(num_blocks: int) -> int:
    return max(1, (1 << num_blocks) // 64)


def tables_to_words(tables: Sequence[int], n_words: int) -> np.ndarray:
    nbytes = 8 * n_words
    buf = b"".join(int(t).to_bytes(nbytes, "little") for t in tables)
    return np.frombuffer(buf, dtype="<u8").reshape(len(tables), n_words).astype(np.uint64)


def words_to_tables(words: np.ndarray, mask: int | None = None) -> list[int]:
    words = np.ascontiguousarray(words, dtype="<u8")
    out = [int.from_bytes(row.tobytes(), "little") for row in words.reshape(words.shape[0], -1)]
    if mask is not None:
        out = [t & mask for t in out]
    return out


def channel_tables(mapping: BlockMapping, num_blocks: int) -> list[int]:
    """Channel atom per active column; punctured columns get the zero function."""
    return [0 if b is None else atom_table(num_blocks, b) for b in mapping.assign]


def propagate_tables(graph: EdgeGraph, channel: Sequence[int], num_blocks: int, iters: int,
                     history: bool = True, backend=None):
    """Run DivE on integer truth tables.

    Returns ``(out_hist, alpha_hist, fixpoint)``; each history is a list over
    iterations ``0 .. iters`` of per-VN (per-edge) integer tables.  Without
    ``history`` only the final iteration is returned, as one-element lists.
    """
    kern = backend or _backend.kernels
    n_words = words_per_table(num_blocks)
    ch = tables_to_words(channel, n_words)
    mask = full_mask(num_blocks)
    if history:
        out_h = np.zeros((iters + 1, graph.n_vn, n_words), dtype=np.uint64)
        alpha_h = np.zeros((iters + 1, graph.n_edges, n_words), dtype=np.uint64)
        _, _, fix = kern.dive_propagate(graph.cn_ptr, graph.vn_ptr, graph.vn_edges, graph.edge_vn,
                                        ch, iters, out_h, alpha_h)
        outs = [words_to_tables(out_h[ell], mask) for ell in range(iters + 1)]
        alphas = [words_to_tables(alpha_h[ell], mask) for ell in range(iters + 1)]
        return outs, alphas, fix
    alpha, out, fix = kern.dive_propagate(graph.cn_ptr, graph.vn_ptr, graph.vn_edges, graph.edge_vn, ch, iters)
    return [words_to_tables(out, mask)], [words_to_tables(alpha, mask)], fix


# ---------------------------------------------------------------------------
# per-realization reference

def fading_msd(bg: BaseGraph, sel: RateSelection, mapping: BlockMapping, realization: Sequence[int],
               iters: int, history: bool = False):
    """Boolean min-sum for one fading realization ``a`` (one bit per block).

    Returns the per-VN output bits after ``iters`` rounds, or with ``history``
    the list of output vectors for iterations ``0 .. iters``.
    """
    mapping.check(bg, sel)
    graph = EdgeGraph.from_base_graph(bg, sel)
    return _fading_msd_graph(graph, mapping.assign, realization, iters, history)


def _fading_msd_graph(graph: EdgeGraph, assign, realization, iters, history=False):
    a = list(realization)
    ch = [0 if b is None else a[b] for b in assign]
    cn_edges = graph.cn_edge_lists
    vn_edges = graph.vn_edge_lists
    evn = graph.edge_vn.tolist()
    alpha = [ch[evn[e]] for e in range(graph.n_edges)]
    beta = [0] * graph.n_edges
    outputs = [list(ch)]
    for _ in range(iters):
        for edges in cn_edges:
            for e in edges:
                bit = 1
                for e2 in edges:
                    if e2 != e:
                        bit &= alpha[e2]
                beta[e] = bit
        new_alpha = [0] * graph.n_edges
        out = []
        for i, edges in enumerate(vn_edges):
            for e in edges:
                bit = ch[i]
                for e2 in edges:
                    if e2 != e:
                        bit |= beta[e2]
                new_alpha[e] = bit
            o = ch[i]
            for e in edges:
                o |= beta[e]
            out.append(o)
        alpha = new_alpha
        outputs.append(out)
    return outputs if history else outputs[-1]


# ---------------------------------------------------------------------------
# generalized rootchecks

def detect_generalized_rootchecks(graph: EdgeGraph, alpha: Sequence[int], mapping: BlockMapping,
                                  num_blocks: int) -> list[tuple[int, int, int]]:
    """CN/target/block triples ``(j, i, m)`` where every other message into CN ``j``
    is ``A_m`` or full diversity, with ``m`` different from the target's block.

    ``alpha`` holds the VN-to-CN message tables of one iteration, indexed by
    edge.  CNs of degree one are skipped (nothing to inspect).
    """
    full = full_diversity_table(num_blocks)
    mask = full_mask(num_blocks)
    atoms = {atom_table(num_blocks, m): m for m in range(num_blocks)}
    found: set[tuple[int, int, int]] = set()
    for j, edges in enumerate(graph.cn_edge_lists):
        if len(edges) < 2:
            continue
        kinds = []
        for e in edges:
            t = alpha[e] & mask
            kinds.append("full" if t == full else atoms.get(t, "other"))
        n_other = kinds.count("other")
        if n_other > 1:
            continue
        for pos, e in enumerate(edges):
            rest = kinds[:pos] + kinds[pos + 1:]
            if "other" in rest:
                continue
            singles = {k for k in rest if k != "full"}
            target = int(graph.edge_vn[e])
            own = mapping.assign[target]
            if len(singles) > 1:
                continue
            candidates = singles if singles else set(range(num_blocks))
            for m in candidates:
                if m != own:
                    found.add((j, target, m))
    return sorted(found)


# ---------------------------------------------------------------------------
# full analysis

@dataclass
class DiveReport:
    num_blocks: int
    info_cols: int
    roles: list[str]
    per_iteration: list[list[int]]
    rootcheck_events: list[tuple[int, int, int, int]] = field(default_factory=list)
    fixpoint: int = -1

    @property
    def iterations(self) -> int:
        return len(self.per_iteration) - 1

    def functions(self, iteration: int = -1) -> list[FadingFunction]:
        return [FadingFunction(self.num_blocks, t) for t in self.per_iteration[iteration]]

    @property
    def final_tables(self) -> list[int]:
        return self.per_iteration[-1]

    @property
    def diversity_orders(self) -> list[int]:
        return [diversity_order_of_table(t, self.num_blocks) for t in self.final_tables]

    def full_diversity_flags(self, iteration: int = -1) -> list[bool]:
        return [is_full_diversity(t, self.num_blocks) for t in self.per_iteration[iteration]]

    @property
    def full_div_count_info(self) -> list[int]:
        return [sum(self.full_diversity_flags(ell)[: self.info_cols]) for ell in range(len(self.per_iteration))]

    @property
    def all_info_full(self) -> bool:
        return self.full_div_count_info[-1] == self.info_cols

    def first_full_iteration(self) -> int | None:
        """Earliest iteration at which every information VN has full diversity."""
        for ell, count in enumerate(self.full_div_count_info):
            if count == self.info_cols:
                return ell
        return None

    def deficient_info_vns(self) -> list[int]:
        flags = self.full_diversity_flags()
        return [i for i in range(self.info_cols) if not flags[i]]

    def format_vn_report(self) -> str:
        width = max(1, (1 << self.num_blocks) // 4)
        lines = [f"# blocks={self.num_blocks} iterations={self.iterations} fixpoint={self.fixpoint}",
                 "# vn role table_hex diversity_order"]
        for i, (t, d) in enumerate(zip(self.final_tables, self.diversity_orders)):
            lines.append(f"{i} {self.roles[i]} {t:0{width}x} {d}")
        return "\n".join(lines) + "\n"

    def format_iteration_csv(self) -> str:
        rows = ["iter,count_full_div_info"]
        rows.extend(f"{ell},{c}" for ell, c in enumerate(self.full_div_count_info))
        return "\n".join(rows) + "\n"


def column_roles(bg: BaseGraph, sel: RateSelection) -> list[str]:
    roles = []
    for i in range(sel.active_cols):
        kind = "info" if i < bg.info_cols else "parity"
        roles.append(kind + ("-punctured" if i in bg.punctured_cols else ""))
    return roles


def dive_run(bg: BaseGraph, sel: RateSelection, mapping: BlockMapping, num_blocks: int | None = None,
             iters: int = DEFAULT_ITERS, rootchecks: bool = True, backend=None) -> DiveReport:
    """Diversity evolution for every realization at once (whole truth tables)."""
    num_blocks = mapping.num_blocks if num_blocks is None else num_blocks
    if not 1 <= num_blocks <= MAX_BLOCKS:
        raise DiveError(f"M={num_blocks} outside [1, {MAX_BLOCKS}]")
    if iters < 0:
        raise DiveError("iters must be >= 0")
    mapping.check(bg, sel)
    graph = EdgeGraph.from_base_graph(bg, sel)
    outs, alphas, fix = propagate_tables(graph, channel_tables(mapping, num_blocks), num_blocks, iters,
                                         backend=backend)
    events = []
    if rootchecks:
        last = iters if fix < 0 else min(iters, fix)
        for ell in range(last):
            events.extend((ell, j, i, m) for j, i, m in detect_generalized_rootchecks(graph, alphas[ell], mapping, num_blocks))
    return DiveReport(num_blocks, bg.info_cols, column_roles(bg, sel), outs, events, fix)
