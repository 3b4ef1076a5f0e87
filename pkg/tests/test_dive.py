import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divalign import _backend, _purepy
from divalign.dive import (DiveError, EdgeGraph, channel_tables, detect_generalized_rootchecks, dive_run, fading_msd,
                           propagate_tables)
from divalign.fading import is_monotone, permute_blocks
from divalign.mapping import BlockMapping, MappingError
from divalign.protograph import from_dense, select_rate
from divalign.verify import random_protograph

# full-diversity info-VN counts per iteration, frozen from the reference mappings
BG1_REF_PROFILE = [0, 1, 3, 5, 9, 13, 17, 20, 21, 22]
BG2_REF_PROFILE = [0, 1, 4, 5, 7, 9, 9, 10]


def test_rootcheck_toy_iteration_one(toy):
    bg, sel, mapping = toy
    report = dive_run(bg, sel, mapping, 2, iters=3)
    assert report.full_div_count_info[:2] == [0, 2]
    assert report.first_full_iteration() == 1
    assert (0, 0, 0, 1) in report.rootcheck_events and (0, 1, 1, 0) in report.rootcheck_events


def test_rootcheck_needs_other_block(toy):
    bg, sel, _ = toy
    same = BlockMapping((0, 0, 0, 0), 2)
    report = dive_run(bg, sel, same, 2, iters=5)
    assert report.full_div_count_info[-1] == 0
    assert report.rootcheck_events == []


def test_reference_profiles(bg1, bg2, bg1_ref, bg2_ref):
    r1 = dive_run(bg1, bg1_ref[0], bg1_ref[1], 2)
    r2 = dive_run(bg2, bg2_ref[0], bg2_ref[1], 2)
    assert r1.full_div_count_info[: len(BG1_REF_PROFILE)] == BG1_REF_PROFILE
    assert r2.full_div_count_info[: len(BG2_REF_PROFILE)] == BG2_REF_PROFILE
    assert r1.all_info_full and r2.all_info_full


def test_parallel_edges_carry_separate_messages():
    # one VN joined to a CN by two edges learns nothing from it
    bg = from_dense([[2, 1]], info_cols=1)
    sel = select_rate(bg, 1)
    report = dive_run(bg, sel, BlockMapping((0, 1), 2), 2, iters=4)
    graph = EdgeGraph.from_base_graph(bg, sel)
    assert graph.n_edges == 3
    assert report.final_tables[0] == 0b1010 | 0b1100 & 0b1010  # A0 plus (A0 AND A1) from the double edge
    assert report.final_tables[1] == 0b1100 | 0b1010  # the single-edge VN hears A0 AND A0


def test_punctured_column_starts_at_zero(bg2, bg2_ref):
    report = dive_run(bg2, *bg2_ref, 2, iters=2)
    assert report.per_iteration[0][0] == report.per_iteration[0][1] == 0


def test_iteration_zero_is_channel(bg2, bg2_ref):
    sel, mapping = bg2_ref
    report = dive_run(bg2, sel, mapping, 2, iters=0)
    assert report.per_iteration == [channel_tables(mapping, 2)]


def test_errors(toy):
    bg, sel, mapping = toy
    with pytest.raises(DiveError):
        dive_run(bg, sel, mapping, 0)
    with pytest.raises(DiveError):
        dive_run(bg, sel, mapping, 2, iters=-1)
    with pytest.raises(MappingError):
        dive_run(bg, sel, BlockMapping((0, 1, 1), 2), 2)


def test_report_formats(toy):
    report = dive_run(*toy, 2, iters=2)
    csv = report.format_iteration_csv().splitlines()
    assert csv[0] == "iter,count_full_div_info" and csv[2] == "1,2"
    lines = report.format_vn_report().splitlines()
    assert lines[2] == "0 info e 2"


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(0, 10))
def test_oracle_equivalence(seed, iters):
    bg, sel, mapping = random_protograph(np.random.default_rng(seed))
    M = mapping.num_blocks
    report = dive_run(bg, sel, mapping, M, iters, rootchecks=False)
    for a_idx in range(1 << M):
        a = [(a_idx >> m) & 1 for m in range(M)]
        hist = fading_msd(bg, sel, mapping, a, iters, history=True)
        for ell in range(iters + 1):
            assert [(t >> a_idx) & 1 for t in report.per_iteration[ell]] == hist[ell]


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_functions_monotone_and_growing(seed):
    bg, sel, mapping = random_protograph(np.random.default_rng(seed))
    M = mapping.num_blocks
    report = dive_run(bg, sel, mapping, M, 10, rootchecks=False)
    for prev, cur in zip(report.per_iteration, report.per_iteration[1:]):
        for p, c in zip(prev, cur):
            assert p & ~c == 0
    for tables in report.per_iteration:
        assert all(t & 1 == 0 and is_monotone(t, M) for t in tables)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_block_relabel_symmetry(seed):
    rng = np.random.default_rng(seed)
    bg, sel, mapping = random_protograph(rng)
    M = mapping.num_blocks
    perm = [int(x) for x in rng.permutation(M)]
    a = dive_run(bg, sel, mapping, M, 6, rootchecks=False)
    b = dive_run(bg, sel, mapping.relabel(perm), M, 6, rootchecks=False)
    assert [permute_blocks(t, M, perm) for t in a.final_tables] == b.final_tables


@pytest.mark.skipif("cython" not in _backend.available(), reason="compiled kernels not built")
@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(0, 12))
def test_backends_agree(seed, iters):
    bg, sel, mapping = random_protograph(np.random.default_rng(seed))
    graph = EdgeGraph.from_base_graph(bg, sel)
    ch = channel_tables(mapping, mapping.num_blocks)
    a = propagate_tables(graph, ch, mapping.num_blocks, iters, backend=_backend.get("cython"))
    b = propagate_tables(graph, ch, mapping.num_blocks, iters, backend=_purepy)
    assert a == b


@pytest.mark.skipif("cython" not in _backend.available(), reason="compiled kernels not built")
def test_backends_agree_wide_tables():
    # M=7 needs two 64-bit words per table
    rng = np.random.default_rng(3)
    bg, sel, _ = random_protograph(rng)
    mapping = BlockMapping(tuple(None if i in bg.punctured_cols else int(rng.integers(7)) for i in range(bg.cols)), 7)
    graph = EdgeGraph.from_base_graph(bg, sel)
    ch = channel_tables(mapping, 7)
    assert propagate_tables(graph, ch, 7, 8, backend=_backend.get("cython")) == propagate_tables(graph, ch, 7, 8,
                                                                                               backend=_purepy)


def test_fixpoint_reported(bg2, bg2_ref):
    report = dive_run(bg2, *bg2_ref, 2, iters=30)
    assert 0 < report.fixpoint <= 30
    assert report.per_iteration[report.fixpoint] == report.per_iteration[-1]


def test_rootcheck_detection_ignores_degree_one():
    graph = EdgeGraph.from_edges(1, 1, 1, (), np.array([0]), np.array([0]))
    assert detect_generalized_rootchecks(graph, [0b1010], BlockMapping((0,), 2), 2) == []


def test_rootcheck_soundness_on_reference(bg2, bg2_ref):
    # an event at iteration l gives its target at least A_pi(i) | A_m at l+1
    report = dive_run(bg2, *bg2_ref, 2)
    sel, mapping = bg2_ref
    for ell, j, i, m in report.rootcheck_events:
        own = 0 if mapping[i] is None else (0b1010, 0b1100)[mapping[i]]
        need = own | (0b1010, 0b1100)[m]
        assert report.per_iteration[ell + 1][i] & need == need
