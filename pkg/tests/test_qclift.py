import numpy as np
import pytest

from divalign.mapping import BlockMapping
from divalign.protograph import from_dense, select_rate
from divalign.qclift import NOT_TRANSMITTED, expand_mapping, format_alist, lift, parse_alist, save_alist


@pytest.fixture(scope="module")
def bg2_code(bg2):
    return lift(bg2, select_rate(bg2, 16))


def test_dimensions(bg2_code):
    assert (bg2_code.n_rows, bg2_code.n_cols, bg2_code.K, bg2_code.N) == (320, 520, 200, 480)


def test_bg1_dimensions(bg1):
    code = lift(bg1, select_rate(bg1, 26))
    assert (code.n_rows, code.n_cols, code.K, code.N) == (6240, 11520, 5280, 11040)


def test_circulant_convention():
    bg = from_dense([[1, 1]], info_cols=1, lifting_size=4)
    bg = type(bg)(1, 2, 1, {(0, 0): bg.entries[(0, 0)], (0, 1): type(bg.entries[(0, 1)])(1, (3,))}, (), 4)
    code = lift(bg, select_rate(bg, 1))
    # row r links column (r + s) % Z of each block column
    assert code.rows[1] == (1, 4 + (1 + 3) % 4)


def test_degrees_follow_base_graph(bg2, bg2_code):
    sel = select_rate(bg2, 16)
    base = bg2.adjacency(sel.active_rows, sel.active_cols)
    assert np.array_equal(bg2_code.row_degrees(), np.repeat(base.sum(axis=1), 20))
    assert np.array_equal(bg2_code.col_degrees(), np.repeat(base.sum(axis=0), 20))


def test_encode_gives_codewords(bg2_code, rng):
    info = rng.integers(0, 2, size=(5, bg2_code.K), dtype=np.uint8)
    words = bg2_code.encode(info)
    assert np.array_equal(words[:, : bg2_code.K], info)
    assert not bg2_code.syndrome(words).any()


def test_dense_matches_rows(bg2_code):
    H = bg2_code.dense()
    assert H.shape == (320, 520) and H.sum() == len(bg2_code.edge_col)


def test_alist_round_trip(bg2_code, tmp_path):
    save_alist(bg2_code, tmp_path / "h.alist")
    assert np.array_equal(parse_alist((tmp_path / "h.alist").read_text()), bg2_code.dense())
    assert format_alist(bg2_code).splitlines()[0] == "520 320"


def test_expand_mapping(bg2_ref):
    _, mapping = bg2_ref
    blocks = expand_mapping(mapping, 20)
    assert blocks.shape == (520,)
    assert (blocks[:40] == NOT_TRANSMITTED).all()
    assert np.array_equal(np.bincount(blocks[blocks >= 0]), [240, 240])
    assert (blocks[40:60] == mapping[2]).all()


def test_punctured_bits(bg2_code):
    assert bg2_code.punctured_bits == frozenset(range(40))
    assert bg2_code.transmitted_mask.sum() == 480
