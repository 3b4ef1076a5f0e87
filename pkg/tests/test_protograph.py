from fractions import Fraction

import pytest

from divalign.protograph import (BaseGraphError, data_path, format_base_graph, from_dense,
                                 identical_neighborhood_pairs, load_base_graph, parity_cols_for_rate, parse_base_graph,
                                 save_base_graph, select_rate, singleton_bound)


def test_bundled_dimensions(bg1, bg2):
    assert (bg1.rows, bg1.cols, bg1.info_cols, bg1.lifting_size) == (46, 68, 22, 240)
    assert (bg2.rows, bg2.cols, bg2.info_cols, bg2.lifting_size) == (42, 52, 10, 20)
    assert bg1.punctured_cols == bg2.punctured_cols == (0, 1)
    assert len(bg1.entries) == 316 and len(bg2.entries) == 197


def test_bg1_known_entries(bg1):
    # lifting-set 7 table at Z=240 (shift = V mod Z)
    assert bg1.row_neighbors(0, 26) == [0, 1, 2, 3, 5, 6, 9, 10, 11, 12, 13, 15, 16, 18, 19, 20, 21, 22, 23]
    assert [bg1.entries[(0, i)].shifts[0] for i in (0, 1, 2, 3, 5)] == [135, 227, 126, 134, 84]


def test_dual_diagonal_core(bg1, bg2):
    for bg in (bg1, bg2):
        k = bg.info_cols
        core = [[(j, k + t) in bg.entries for t in range(4)] for j in range(4)]
        assert core[0][:2] == [True, True] and core[3][3]
        assert all(sum(r) in (2, 3) for r in core)


def test_round_trip(bg2, tmp_path):
    path = tmp_path / "bg2_copy.txt"
    save_base_graph(bg2, path)
    again = load_base_graph(path, 20)
    assert again.same_structure(bg2)
    assert format_base_graph(again) == format_base_graph(bg2)


def test_checksum_flip_detected(tmp_path):
    text = data_path("bg2_z20.txt").read_text()
    lines = text.splitlines(keepends=True)
    idx = next(i for i, l in enumerate(lines) if l[0].isdigit())
    j, i, s = lines[idx].split()
    lines[idx] = f"{j} {i} {(int(s) + 1) % 20}\n"
    with pytest.raises(BaseGraphError, match="checksum"):
        parse_base_graph("".join(lines), 20)


@pytest.mark.parametrize("text, msg", [
    ("bg 1 2 1 -\n0 0 0\n", "disconnected VN"),
    ("bg 1 2 1 -\n0 0 0\n0 1 5\n", "shift 5"),
    ("bg 1 2 1 -\n0 0 0,0\n0 1 0\n", "repeated shift"),
    ("0 0 0\n", "header"),
    ("bg 1 2 1 -\n0 0 0\n0 0 1\n", "duplicate"),
])
def test_malformed(text, msg):
    with pytest.raises(BaseGraphError, match=msg):
        parse_base_graph(text, 4)


def test_error_carries_line():
    with pytest.raises(BaseGraphError) as info:
        parse_base_graph("bg 1 2 1 -\n0 0 x\n", 4)
    assert info.value.line == 2


def test_wrong_5g_dims(tmp_path):
    path = tmp_path / "bg1_small.txt"
    path.write_text("bg 1 2 1 -\n0 0 0\n0 1 0\n")
    with pytest.raises(BaseGraphError, match="BG1"):
        load_base_graph(path, 4)


def test_rates(bg1, bg2):
    assert select_rate(bg1, 26).rate == Fraction(22, 46)
    assert select_rate(bg2, 16).rate == Fraction(10, 24)
    assert len(select_rate(bg2, 16).transmitted_cols) == 24
    assert parity_cols_for_rate(bg1, Fraction(1, 2)) == 24
    assert parity_cols_for_rate(bg2, "1/2") == 12
    with pytest.raises(ValueError):
        select_rate(bg2, 0)


def test_singleton():
    assert singleton_bound(2, Fraction(1, 2)) == 2
    assert singleton_bound(2, Fraction(11, 21)) == 1
    assert singleton_bound(2, Fraction(10, 24)) == 2
    assert singleton_bound(3, Fraction(1, 3)) == 3
    with pytest.raises(ValueError):
        singleton_bound(2, 0)


def test_twins():
    bg = from_dense([[1, 1, 1, 0], [1, 1, 0, 1]], info_cols=2)
    assert identical_neighborhood_pairs(bg, select_rate(bg, 2)) == [(0, 1)]


def test_no_twins_at_reference_rates(bg1, bg2):
    # frozen from the active-neighborhood comparison
    assert identical_neighborhood_pairs(bg2, select_rate(bg2, 16)) == []
    assert identical_neighborhood_pairs(bg1, select_rate(bg1, 26)) == [(16, 21)]


def test_reference_mapping_separates_twins(bg1_ref):
    _, mapping = bg1_ref
    assert mapping[16] != mapping[21]
