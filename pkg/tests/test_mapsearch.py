import itertools
import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from divalign.dive import dive_run
from divalign.mapping import BlockMapping, format_mapping, parse_mapping
from divalign.mapsearch import (PUNCT, UNASSIGNED, CandidateRejected, GreedyFailure, PartialMapping, SearchConfig,
                                SearchFailure, SearchResult, candidates, greedy_complete, pre_assign_1, pre_assign_2,
                                pre_assign_3, random_mapping, search_da_mapping, trial_rng)
from divalign.protograph import from_dense, identical_neighborhood_pairs, select_rate, singleton_bound

FROZEN = json.loads((Path(__file__).parent / "fixtures" / "derived.json").read_text())
U = UNASSIGNED


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig(max_trials=0)
    with pytest.raises(ValueError):
        SearchConfig(iters=0)


# pre-assignment 1

def test_twins_constraint():
    bg = from_dense([[1, 1, 1, 0], [1, 1, 0, 1]], info_cols=2)
    assert pre_assign_1(bg, select_rate(bg, 2)) == ((0, 1),)


def test_no_twins(bg2):
    assert pre_assign_1(bg2, select_rate(bg2, 16)) == ()


def test_twin_triangle_rejected():
    bg = from_dense([[1, 1, 1, 1, 0], [1, 1, 1, 0, 1]], info_cols=3)
    with pytest.raises(CandidateRejected, match="odd cycle"):
        pre_assign_1(bg, select_rate(bg, 2))


def test_twins_conflict_with_assignment():
    bg = from_dense([[1, 1, 1, 0], [1, 1, 0, 1]], info_cols=2)
    with pytest.raises(CandidateRejected):
        pre_assign_1(bg, select_rate(bg, 2), PartialMapping((0, 0, U, U)))


# pre-assignment 2

def test_bg1_core_enumeration(bg1):
    sel = select_rate(bg1, 26)
    cands = pre_assign_2(bg1, sel)
    assert [c.label for c in cands] == [f"p={x:04b}" for x in range(8)]
    for c in cands:
        core = c.assign[22:26]
        assert core == tuple(int(ch) for ch in c.label[2:])
        assert all(b == U for b in c.assign[2:22]) and c.assign[:2] == (PUNCT, PUNCT)


def test_no_swapped_duplicates(bg1, bg2):
    for bg, p in ((bg1, 26), (bg2, 16)):
        cands = {c.assign for c in pre_assign_2(bg, select_rate(bg, p))}
        swapped = {tuple(1 - b if b >= 0 else b for b in a) for a in cands}
        assert not cands & swapped


def test_single_parity_toy():
    bg = from_dense([[1, 1, 1]], info_cols=2)
    cands = pre_assign_2(bg, select_rate(bg, 1))
    assert len(cands) == 1 and cands[0].assign == (U, U, 0)


def test_bg2_propagation_matches_frozen(bg2):
    got = [[None if b < 0 else b for b in c.assign] for c in pre_assign_2(bg2, select_rate(bg2, 16))]
    assert got == FROZEN["bg2_parity_extents_p16"]


# pre-assignment 3

def _punctured_toy():
    # column 0 is a punctured info column joined to two CNs with one other neighbor each
    bg = from_dense([[1, 1, 0], [1, 0, 1]], info_cols=1, punctured=[0])
    return bg, select_rate(bg, 2)


def test_punctured_gets_both_atoms():
    bg, sel = _punctured_toy()
    first = next(pre_assign_3(bg, sel, PartialMapping((PUNCT, U, U)), seed=0))
    assert sorted(first.assign[1:]) == [0, 1]
    report = dive_run(bg, sel, first.to_block_mapping(), 2, iters=1)
    assert report.per_iteration[1][0] == 0b1110


def test_punctured_candidates_cover_both_orders():
    bg, sel = _punctured_toy()
    got = [c.assign for c in pre_assign_3(bg, sel, PartialMapping((PUNCT, U, U)), seed=3)]
    assert sorted(got) == [(PUNCT, 0, 1), (PUNCT, 1, 0)]


def test_no_punctured_passthrough(toy):
    bg, sel, _ = toy
    pm = PartialMapping((0, U, U, U))
    assert list(pre_assign_3(bg, sel, pm)) == [pm]


def test_punctured_single_cn_rejected():
    bg = from_dense([[1, 1, 1, 0], [0, 1, 0, 1]], info_cols=2, punctured=[0])
    sel = select_rate(bg, 2)
    assert list(pre_assign_3(bg, sel, PartialMapping((PUNCT, U, U, U)))) == []


def test_bg2_first_selection_frozen(bg2):
    sel = select_rate(bg2, 16)
    first = next(candidates(bg2, sel, SearchConfig()))
    assert first.label == "p=0001 v0:c4/c13 v1:c4/c10"
    assert sum(1 for _ in candidates(bg2, sel, SearchConfig())) == 84


def test_pre_assign_3_respects_earlier_blocks(bg2):
    sel = select_rate(bg2, 16)
    for pm in pre_assign_2(bg2, sel):
        for cand in itertools.islice(pre_assign_3(bg2, sel, pm, 0), 5):
            assert all(a == b for a, b in zip(pm.assign, cand.assign) if a != U)


# greedy completion

def test_greedy_picks_only_feasible_block(toy):
    bg, sel, _ = toy
    pm = PartialMapping((0, 1, U, 0))
    res = greedy_complete(bg, sel, pm, SearchConfig(), trial_rng(0, 2, 0, 0))
    assert isinstance(res, BlockMapping) and res.assign == (0, 1, 1, 0)


def test_greedy_reports_failure():
    bg = from_dense([[1, 1, 1, 0], [1, 1, 0, 1]], info_cols=2)
    sel = select_rate(bg, 2)
    res = greedy_complete(bg, sel, PartialMapping((0, 0, 0, 0)), SearchConfig(balanced=False), trial_rng(0, 2, 0, 0))
    assert isinstance(res, GreedyFailure) and res.best_info_full == 0


def test_greedy_honors_twin_constraint():
    bg = from_dense([[1, 1, 1, 0], [1, 1, 0, 1]], info_cols=2)
    sel = select_rate(bg, 2)
    for seed in range(5):
        res = greedy_complete(bg, sel, PartialMapping((U, U, U, U), ((0, 1),)), SearchConfig(), trial_rng(seed, 2, 0, 0))
        assert isinstance(res, BlockMapping) and res[0] != res[1]


# full search

@pytest.fixture(scope="module")
def bg2_result(bg2):
    return search_da_mapping(bg2, SearchConfig(start_parity_cols=16, max_parity_cols=16))


def test_bg2_at_reference_rate(bg2, bg2_result):
    assert isinstance(bg2_result, SearchResult)
    assert bg2_result.rate == Fraction(10, 24) and bg2_result.rate_str == "10/24"
    sel = select_rate(bg2, 16)
    report = dive_run(bg2, sel, bg2_result.mapping, 2, 20)
    assert report.all_info_full
    assert bg2_result.iterations_to_full == report.first_full_iteration()
    assert bg2_result.mapping.is_balanced()
    assert singleton_bound(2, bg2_result.rate) == 2
    for a, b in identical_neighborhood_pairs(bg2, sel):
        assert bg2_result.mapping[a] != bg2_result.mapping[b]


def test_search_deterministic(bg2, bg2_result):
    again = search_da_mapping(bg2, SearchConfig(start_parity_cols=16, max_parity_cols=16))
    assert again == bg2_result


def test_search_process_workers_match(bg2, bg2_result):
    par = search_da_mapping(bg2, SearchConfig(start_parity_cols=16, max_parity_cols=16, workers=2))
    assert par == bg2_result


def test_search_fail_small_budget(bg2):
    res = search_da_mapping(bg2, SearchConfig(max_trials=2, max_parity_cols=12))
    assert isinstance(res, SearchFailure) and res.tried_parity_cols == [12]


def test_result_mapping_file_round_trip(bg2_result, tmp_path):
    text = format_mapping(bg2_result.mapping, {"rate": bg2_result.rate_str, "seed": 0,
                                               "trials_used": bg2_result.trials_used})
    back = parse_mapping(text)
    assert back == bg2_result.mapping and back.meta["rate"] == "10/24"


# random mappings

def test_random_mapping_deterministic_and_balanced(bg2):
    sel = select_rate(bg2, 16)
    a, b = random_mapping(bg2, sel, 7), random_mapping(bg2, sel, 7)
    assert a == b and a.is_balanced() and a != random_mapping(bg2, sel, 8)
    a.check(bg2, sel)
    assert not all(random_mapping(bg2, sel, s, balanced=False).is_balanced() for s in range(20))


def test_random_counts_frozen(bg2):
    sel = select_rate(bg2, 16)
    counts = [dive_run(bg2, sel, random_mapping(bg2, sel, s), 2).full_div_count_info[-1] for s in range(200)]
    assert counts == FROZEN["bg2_random_counts_p16"]
    assert np.mean(np.array(counts) == 10) < 0.05
