"""Diversity evolution and diversity-aligned block mapping for protograph LDPC codes."""

from ._backend import BACKEND
from .dive import DiveReport, dive_run, fading_msd
from .fading import FadingFunction, diversity_order, ff_and, ff_or
from .mapping import BlockMapping, load_mapping, save_mapping
from .protograph import (
    BaseGraph,
    EdgeSpec,
    RateSelection,
    bundled_base_graph,
    identical_neighborhood_pairs,
    load_base_graph,
    select_rate,
    singleton_bound,
)
from .mapsearch import SearchConfig, SearchFailure, SearchResult, random_mapping, search_da_mapping
from .qclift import LiftedCode, expand_mapping, lift
from .simkit import ChannelConfig, DecoderConfig, SimResult, estimate_diversity_slope, run_bler

__version__ = "0.1.0"
