"""Greedy search for diversity-aligned two-block mappings.

Candidates come from three pre-assignments: twin columns go to different
blocks, the dual-diagonal parity core is enumerated (modulo a global block
swap) and propagated through the parity part, and each punctured column is
given one CN feeding ``A_0`` and one feeding ``A_1``.  Each candidate is
completed by a randomized greedy pass that creates generalized rootchecks,
then certified by a full DivE run.  When no candidate certifies, one more
parity column is included and the search repeats.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from . import _backend
from .dive import DEFAULT_ITERS, EdgeGraph, dive_run
from .fading import atom_table
from .mapping import BlockMapping
from .protograph import BaseGraph, RateSelection, identical_neighborhood_pairs, parity_cols_for_rate, select_rate

log = logging.getLogger(__name__)

UNASSIGNED = -1
PUNCT = -2
NUM_BLOCKS = 2

# M=2 truth tables (bit a = realization index)
_A = (atom_table(2, 0), atom_table(2, 1))  # 0b1010, 0b1100
_FULL = 0b1110
_NIBBLE_SHIFTS = np.arange(16, dtype=np.uint64) * np.uint64(4)


class CandidateRejected(Exception):
    pass


@dataclass(frozen=True)
class SearchConfig:
    max_trials: int = 200
    iters: int = DEFAULT_ITERS
    rng_seed: int = 0
    balanced: bool = True
    start_parity_cols: int | None = None
    max_parity_cols: int | None = None
    max_pa3_candidates: int = 16
    max_local_vns: int = 10
    fill_on_stall: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.max_trials < 1:
            raise ValueError("max_trials must be >= 1")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.max_pa3_candidates < 1 or self.max_local_vns < 1:
            raise ValueError("candidate and local-assignment limits must be >= 1")


@dataclass(frozen=True)
class PartialMapping:
    """Per active column: block 0/1, ``UNASSIGNED`` or ``PUNCT``."""

    assign: tuple[int, ...]
    neq: tuple[tuple[int, int], ...] = ()
    label: str = ""

    def unassigned(self) -> list[int]:
        return [i for i, b in enumerate(self.assign) if b == UNASSIGNED]

    def to_block_mapping(self) -> BlockMapping:
        if UNASSIGNED in self.assign:
            raise ValueError("partial mapping still has unassigned columns")
        return BlockMapping(tuple(None if b == PUNCT else b for b in self.assign), NUM_BLOCKS)


@dataclass
class GreedyFailure:
    reason: str
    unfilled: list[int] = field(default_factory=list)
    best_info_full: int = 0


@dataclass(frozen=True)
class SearchResult:
    mapping: BlockMapping
    rate: Fraction
    parity_cols: int
    iterations_to_full: int
    trials_used: int
    candidate_index: int
    trial_index: int

    @property
    def rate_str(self) -> str:
        tx = len(self.mapping.transmitted)
        return f"{self.rate * tx}/{tx}"


@dataclass
class SearchFailure:
    reason: str
    trials_used: int
    tried_parity_cols: list[int]
    best_info_full: int = 0


# ---------------------------------------------------------------------------
# context shared by all steps at one rate

class _Context:
    def __init__(self, bg: BaseGraph, sel: RateSelection, balanced: bool):
        self.bg = bg
        self.sel = sel
        self.graph = EdgeGraph.from_base_graph(bg, sel)
        self.info = bg.info_cols
        self.n = sel.active_cols
        self.punct = set(sel.punctured_active)
        self.n_tx = len(sel.transmitted_cols)
        self.cap = -(-self.n_tx // NUM_BLOCKS) if balanced else self.n_tx
        self.cn_nbrs = self.graph.cn_neighbors
        self.vn_nbrs = self.graph.vn_neighbors
        self.twins = [(a, b) for a, b in identical_neighborhood_pairs(bg, sel)
                      if a not in self.punct and b not in self.punct]

    def initial(self) -> list[int]:
        return [PUNCT if i in self.punct else UNASSIGNED for i in range(self.n)]


def _neq_map(pairs) -> dict[int, set[int]]:
    out: dict[int, set[int]] = {}
    for a, b in pairs:
        out.setdefault(a, set()).add(b)
        out.setdefault(b, set()).add(a)
    return out


def _propagate_neq(assign: list[int], pairs) -> None:
    """Force the partner of every assigned constrained column; raise on conflict."""
    nbrs = _neq_map(pairs)
    stack = [i for i in nbrs if assign[i] >= 0]
    while stack:
        i = stack.pop()
        for k in nbrs[i]:
            want = 1 - assign[i]
            if assign[k] == UNASSIGNED:
                assign[k] = want
                stack.append(k)
            elif assign[k] != want:
                raise CandidateRejected(f"columns {i} and {k} must differ but share block {assign[i]}")


def _check_capacity(ctx: _Context, assign: list[int]) -> None:
    for b in range(NUM_BLOCKS):
        if assign.count(b) > ctx.cap:
            raise CandidateRejected(f"block {b} over capacity {ctx.cap}")


# ---------------------------------------------------------------------------
# pre-assignments

def pre_assign_1(bg: BaseGraph, sel: RateSelection, pm: PartialMapping | None = None) -> tuple[tuple[int, int], ...]:
    """Not-equal constraints between transmitted twin columns.

    Raises ``CandidateRejected`` if the constraint graph is not 2-colorable or
    contradicts blocks already assigned in ``pm``.
    """
    punct = set(sel.punctured_active)
    pairs = tuple((a, b) for a, b in identical_neighborhood_pairs(bg, sel) if a not in punct and b not in punct)
    nbrs = _neq_map(pairs)
    color: dict[int, int] = {}
    for start in sorted(nbrs):
        if start in color:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            i = stack.pop()
            for k in nbrs[i]:
                if k not in color:
                    color[k] = 1 - color[i]
                    stack.append(k)
                elif color[k] == color[i]:
                    raise CandidateRejected(f"odd cycle of twin columns through {i} and {k}")
    if pm is not None:
        _propagate_neq(list(pm.assign), pairs)
    return pairs


def pre_assign_2(bg: BaseGraph, sel: RateSelection) -> list[PartialMapping]:
    """Enumerate blocks of the first (up to four) parity columns, first one fixed
    to block 0, and propagate through the parity part row by row."""
    ctx_punct = set(sel.punctured_active)
    q = min(4, sel.active_cols - bg.info_cols)
    core = [bg.info_cols + t for t in range(q)]
    rows = [sorted(set(bg.row_neighbors(j, sel.active_cols))) for j in range(sel.active_rows)]
    out = []
    for rest in itertools.product((0, 1), repeat=q - 1):
        assign = [PUNCT if i in ctx_punct else UNASSIGNED for i in range(sel.active_cols)]
        bits = (0,) + rest
        for col, b in zip(core, bits):
            if assign[col] == UNASSIGNED:
                assign[col] = b
        for nbrs in rows:
            parity = [i for i in nbrs if i >= bg.info_cols and assign[i] != PUNCT]
            seen = {assign[i] for i in parity if assign[i] >= 0}
            if len(seen) == 1:
                b = seen.pop()
                for i in parity:
                    if assign[i] == UNASSIGNED:
                        assign[i] = b
        out.append(PartialMapping(tuple(assign), label="p=" + "".join(map(str, bits))))
    return out


def _diagonal_product(sizes: list[int]) -> Iterator[tuple[int, ...]]:
    """All index tuples with ``t[k] < sizes[k]``, ordered by increasing rank sum."""
    if not sizes:
        yield ()
        return
    total = sum(sizes) - len(sizes)
    for s in range(total + 1):
        yield from _tuples_with_sum(sizes, s)


def _tuples_with_sum(sizes, s):
    if len(sizes) == 1:
        if s < sizes[0]:
            yield (s,)
        return
    for first in range(min(s, sizes[0] - 1) + 1):
        for tail in _tuples_with_sum(sizes[1:], s - first):
            yield (first,) + tail


def pre_assign_3(bg: BaseGraph, sel: RateSelection, pm: PartialMapping, seed: int = 0,
                 balanced: bool = True) -> Iterator[PartialMapping]:
    """Lazily yield completions where each punctured column has one adjacent CN whose
    other transmitted neighbors are all in block 0 and one whose are all in block 1.

    CN pairs are ordered by how many transmitted columns they constrain (fewer
    first), ties broken by a permutation drawn from ``seed``.  Choices that
    clash with earlier assignments or constraints are skipped.
    """
    ctx = _Context(bg, sel, balanced)
    punct = sorted(ctx.punct)
    if not punct:
        yield pm
        return
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sel.active_rows, 3)))
    choices = []
    for v in punct:
        adj = ctx.vn_nbrs[v]
        if len(adj) < 2:
            return
        pairs = [(ca, cb) for ca in adj for cb in adj if ca != cb]
        tiebreak = rng.permutation(len(pairs))
        load = [sum(1 for x in ctx.cn_nbrs[ca] + ctx.cn_nbrs[cb] if x not in ctx.punct) for ca, cb in pairs]
        order = sorted(range(len(pairs)), key=lambda k: (load[k], tiebreak[k]))
        choices.append([pairs[k] for k in order])
    for combo in _diagonal_product([len(c) for c in choices]):
        assign = list(pm.assign)
        picked = []
        try:
            for v, rank in zip(punct, combo):
                ca, cb = choices[punct.index(v)][rank]
                picked.append((v, ca, cb))
                for cn, block in ((ca, 0), (cb, 1)):
                    for x in ctx.cn_nbrs[cn]:
                        if x == v or x in ctx.punct:
                            continue
                        if assign[x] == UNASSIGNED:
                            assign[x] = block
                        elif assign[x] != block:
                            raise CandidateRejected("conflict")
            _propagate_neq(assign, pm.neq)
            _check_capacity(ctx, assign)
        except CandidateRejected:
            continue
        label = pm.label + " " + " ".join(f"v{v}:c{ca}/c{cb}" for v, ca, cb in picked)
        yield PartialMapping(tuple(assign), pm.neq, label.strip())


def candidates(bg: BaseGraph, sel: RateSelection, cfg: SearchConfig) -> Iterator[PartialMapping]:
    """Pre-assignment candidates in deterministic order."""
    ctx = _Context(bg, sel, cfg.balanced)
    for pm in pre_assign_2(bg, sel):
        try:
            neq = pre_assign_1(bg, sel, pm)
            assign = list(pm.assign)
            _propagate_neq(assign, neq)
            _check_capacity(ctx, assign)
        except CandidateRejected as exc:
            log.debug("candidate %s rejected: %s", pm.label, exc)
            continue
        base = PartialMapping(tuple(assign), neq, pm.label)
        yield from itertools.islice(pre_assign_3(bg, sel, base, cfg.rng_seed, cfg.balanced), cfg.max_pa3_candidates)


# ---------------------------------------------------------------------------
# greedy completion

def _words_for(assign: list[int], lanes: int, local: list[int] | None = None) -> np.ndarray:
    """Channel words with ``lanes`` packed M=2 tables per VN.

    VN ``local[q]`` gets block ``(lane >> q) & 1``; other assigned VNs the same
    atom in every lane; unassigned and punctured VNs the zero function.
    """
    n_words = max(1, -(-lanes // 16))
    lane_idx = np.arange(n_words * 16, dtype=np.uint64)
    words = np.zeros((len(assign), n_words), dtype=np.uint64)
    rep = [np.uint64(int("a" * 16, 16)), np.uint64(int("c" * 16, 16))]
    for i, b in enumerate(assign):
        if b >= 0:
            words[i, :] = rep[b]
    if local:
        for q, i in enumerate(local):
            bits = (lane_idx >> np.uint64(q)) & np.uint64(1)
            nib = np.where(bits == 1, np.uint64(_A[1]), np.uint64(_A[0])).reshape(n_words, 16)
            words[i] = np.bitwise_or.reduce(nib << _NIBBLE_SHIFTS, axis=1)
    return words


def _lanes(words: np.ndarray, lanes: int) -> np.ndarray:
    """``(rows, lanes)`` array of 4-bit tables from packed words."""
    nib = (words[:, :, None] >> _NIBBLE_SHIFTS) & np.uint64(15)
    return nib.reshape(words.shape[0], -1)[:, :lanes].astype(np.uint8)


def _run(graph: EdgeGraph, words: np.ndarray, iters: int):
    alpha, out, _ = _backend.kernels.dive_propagate(graph.cn_ptr, graph.vn_ptr, graph.vn_edges, graph.edge_vn,
                                                    words, iters)
    return alpha, out


def _full_info(ctx: _Context, assign: list[int], iters: int) -> np.ndarray:
    _, out = _run(ctx.graph, _words_for(assign, 1), iters)
    tables = _lanes(out, 1)[:, 0]
    return (tables & _FULL) == _FULL


def _local_options(ctx: _Context, assign: list[int], j: int, neq: dict[int, set[int]], full_now: np.ndarray,
                   iters: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Assignments of CN ``j``'s unassigned neighbors that make ``j`` a generalized
    rootcheck for an adjacent information VN that was not yet at full diversity."""
    local = [i for i in ctx.cn_nbrs[j] if assign[i] == UNASSIGNED]
    u = len(local)
    lanes = 1 << u
    lane_ids = np.arange(lanes)
    lane_bits = ((lane_ids[None, :] >> np.arange(u)[:, None]) & 1).astype(np.int8)  # (u, lanes)

    # constraints and capacity
    valid = np.ones(lanes, dtype=bool)
    pos = {i: q for q, i in enumerate(local)}
    for q, i in enumerate(local):
        for k in neq.get(i, ()):
            if k in pos:
                valid &= lane_bits[q] != lane_bits[pos[k]]
            elif assign[k] >= 0:
                valid &= lane_bits[q] != assign[k]
    ones = lane_bits.sum(axis=0)
    valid &= assign.count(1) + ones <= ctx.cap
    valid &= assign.count(0) + (u - ones) <= ctx.cap
    if not valid.any():
        return []

    targets = [i for i in ctx.cn_nbrs[j] if i < ctx.info and not full_now[i]]
    if not targets:
        return []
    alpha, out = _run(ctx.graph, _words_for(assign, lanes, local), iters)
    out_t = _lanes(out, lanes)
    lo, hi = ctx.graph.cn_ptr[j], ctx.graph.cn_ptr[j + 1]
    alpha_t = _lanes(alpha[lo:hi], lanes)  # (deg, lanes)
    edge_vn = ctx.graph.edge_vn[lo:hi]
    is_full = alpha_t == _FULL
    ok_m = [is_full | (alpha_t == _A[m]) for m in range(NUM_BLOCKS)]
    good = np.zeros(lanes, dtype=bool)
    for i in targets:
        own = (np.full(lanes, -1, dtype=np.int8) if assign[i] == PUNCT
               else lane_bits[pos[i]] if i in pos else np.full(lanes, assign[i], dtype=np.int8))
        becomes_full = (out_t[i] & _FULL) == _FULL
        for e_pos in np.flatnonzero(edge_vn == i):
            others = np.ones(len(edge_vn), dtype=bool)
            others[e_pos] = False
            rc = np.zeros(lanes, dtype=bool)
            for m in range(NUM_BLOCKS):
                rc |= ok_m[m][others].all(axis=0) & (own != m)
            good |= rc & becomes_full
    good &= valid
    return [(tuple(local), tuple(int(b) for b in lane_bits[:, lane])) for lane in np.flatnonzero(good)]


def greedy_complete(bg: BaseGraph, sel: RateSelection, pm: PartialMapping, cfg: SearchConfig,
                    rng: np.random.Generator, ctx: _Context | None = None) -> BlockMapping | GreedyFailure:
    ctx = ctx or _Context(bg, sel, cfg.balanced)
    assign = list(pm.assign)
    neq = _neq_map(pm.neq)
    full_now = _full_info(ctx, assign, cfg.iters)
    while UNASSIGNED in assign and not full_now[: ctx.info].all():
        u_of = {}
        for j, nbrs in enumerate(ctx.cn_nbrs):
            u = sum(1 for i in nbrs if assign[i] == UNASSIGNED)
            if 0 < u <= cfg.max_local_vns:
                u_of.setdefault(u, []).append(j)
        chosen = None
        for u in sorted(u_of):
            feasible = []
            for j in u_of[u]:
                feasible.extend(_local_options(ctx, assign, j, neq, full_now, cfg.iters))
            if feasible:
                chosen = feasible[int(rng.integers(len(feasible)))]
                break
        if chosen is None:
            break
        for i, b in zip(*chosen):
            assign[i] = b
        full_now = _full_info(ctx, assign, cfg.iters)

    # random fill of whatever is left
    rest = [i for i in range(ctx.n) if assign[i] == UNASSIGNED]
    if rest and not cfg.fill_on_stall and not full_now[: ctx.info].all():
        return GreedyFailure("no feasible local assignment", rest, int(full_now[: ctx.info].sum()))
    for i in rng.permutation(rest).tolist() if rest else []:
        allowed = [b for b in range(NUM_BLOCKS)
                   if assign.count(b) < ctx.cap and all(assign[k] != b for k in neq.get(i, ()))]
        if not allowed:
            return GreedyFailure("no block satisfies constraints and capacity",
                                 [k for k in range(ctx.n) if assign[k] == UNASSIGNED], int(full_now[: ctx.info].sum()))
        assign[i] = allowed[int(rng.integers(len(allowed)))]

    mapping = PartialMapping(tuple(assign)).to_block_mapping()
    report = dive_run(bg, sel, mapping, NUM_BLOCKS, cfg.iters, rootchecks=False)
    if report.all_info_full:
        return mapping
    return GreedyFailure("final certification failed", [], report.full_div_count_info[-1])


# ---------------------------------------------------------------------------
# outer search

def trial_rng(seed: int, parity_cols: int, candidate: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(parity_cols, candidate, trial)))


def _run_trials(bg, sel, pm, cfg, cand_idx, start, stop):
    """Trials ``start .. stop-1`` of one candidate; first success or ``None``, plus best count."""
    ctx = _Context(bg, sel, cfg.balanced)
    best = 0
    for t in range(start, stop):
        res = greedy_complete(bg, sel, pm, cfg, trial_rng(cfg.rng_seed, sel.active_rows, cand_idx, t), ctx)
        if isinstance(res, BlockMapping):
            return t, res, bg.info_cols
        best = max(best, res.best_info_full)
    return None, None, best


def search_da_mapping(bg: BaseGraph, cfg: SearchConfig = SearchConfig()) -> SearchResult | SearchFailure:
    start = cfg.start_parity_cols or parity_cols_for_rate(bg, Fraction(1, 2))
    stop = cfg.max_parity_cols or bg.parity_cols
    trials_used = 0
    best = 0
    tried = []
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for p in range(start, stop + 1):
            sel = select_rate(bg, p)
            tried.append(p)
            log.info("rate %d/%d (parity_cols=%d)", bg.info_cols, len(sel.transmitted_cols), p)
            for c_idx, pm in enumerate(candidates(bg, sel, cfg)):
                t, mapping, cand_best = _trials_for_candidate(bg, sel, pm, cfg, c_idx, pool)
                best = max(best, cand_best)
                if mapping is None:
                    trials_used += cfg.max_trials
                    continue
                trials_used += t + 1
                report = dive_run(bg, sel, mapping, NUM_BLOCKS, cfg.iters, rootchecks=False)
                if not report.all_info_full:
                    raise AssertionError("search returned a mapping that does not re-certify")
                return SearchResult(mapping, sel.rate, p, report.first_full_iteration(), trials_used, c_idx, t)
    finally:
        if pool:
            pool.shutdown()
    return SearchFailure("no certified mapping within the trial budget", trials_used, tried, best)


def _trials_for_candidate(bg, sel, pm, cfg, c_idx, pool):
    if pool is None:
        return _run_trials(bg, sel, pm, cfg, c_idx, 0, cfg.max_trials)
    chunk = -(-cfg.max_trials // cfg.workers)
    futures = [pool.submit(_run_trials, bg, sel, pm, cfg, c_idx, s, min(s + chunk, cfg.max_trials))
               for s in range(0, cfg.max_trials, chunk)]
    results = [f.result() for f in futures]
    best = max(r[2] for r in results)
    hits = [(t, m) for t, m, _ in results if m is not None]
    if not hits:
        return None, None, best
    t, m = min(hits, key=lambda h: h[0])
    return t, m, best


def random_mapping(bg: BaseGraph, sel: RateSelection, seed: int, balanced: bool = True) -> BlockMapping:
    """Uniformly random block per transmitted column (balanced: a random permutation
    of equal block populations, the odd column's block drawn at random)."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(sel.active_rows, 7)))
    tx = list(sel.transmitted_cols)
    if balanced:
        blocks = np.array([b for b in range(NUM_BLOCKS) for _ in range(len(tx) // NUM_BLOCKS)], dtype=np.int64)
        extra = rng.choice(NUM_BLOCKS, size=len(tx) % NUM_BLOCKS, replace=False)
        blocks = rng.permutation(np.concatenate([blocks, extra]))
    else:
        blocks = rng.integers(0, NUM_BLOCKS, size=len(tx))
    assign: list[int | None] = [None] * sel.active_cols
    for col, b in zip(tx, blocks.tolist()):
        assign[col] = int(b)
    return BlockMapping(tuple(assign), NUM_BLOCKS)
