"""Self-check suite bundled with the package.

Each check returns ``(name, ok, detail)``.  The DivE and oracle callables
are parameters so a broken implementation can be swapped in and caught.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import _backend, _purepy
from .dive import dive_run, fading_msd
from .fading import is_monotone
from .mapping import BlockMapping, load_mapping
from .protograph import BaseGraphError, data_path, from_dense, load_base_graph, select_rate, singleton_bound

BUNDLED = {"bg1": ("bg1_z240.txt", 240, "bg1_r22_46.map"), "bg2": ("bg2_z20.txt", 20, "bg2_r10_24.map")}
EXPECTED_FULL_BY = {"bg1": None, "bg2": 7}


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


def _dir(data_dir) -> Path:
    return Path(data_dir) if data_dir else data_path("")


def check_checksums(data_dir=None) -> CheckResult:
    bad = []
    for name, (fn, z, _) in BUNDLED.items():
        try:
            load_base_graph(_dir(data_dir) / fn, z)
        except (BaseGraphError, OSError) as exc:
            bad.append(f"{fn}: {exc}")
    return CheckResult("base-graph-checksums", not bad, "; ".join(bad))


def check_reference_mapping(name: str, data_dir=None, dive=dive_run) -> CheckResult:
    fn, z, map_fn = BUNDLED[name]
    try:
        bg = load_base_graph(_dir(data_dir) / fn, z)
        mapping = load_mapping(_dir(data_dir) / map_fn)
    except (BaseGraphError, OSError, ValueError) as exc:
        return CheckResult(f"{name}-reference-mapping", False, str(exc))
    sel = select_rate(bg, len(mapping) - bg.info_cols)
    report = dive(bg, sel, mapping, 2)
    first = report.first_full_iteration()
    limit = EXPECTED_FULL_BY[name]
    ok = report.all_info_full and (limit is None or first <= limit)
    detail = f"rate {bg.info_cols}/{len(sel.transmitted_cols)}, all info VNs full at iteration {first}"
    if not report.all_info_full:
        detail = f"deficient info VNs {report.deficient_info_vns()}"
    return CheckResult(f"{name}-reference-mapping", ok, detail)


def check_singleton(data_dir=None) -> CheckResult:
    bad = []
    for name, (fn, z, map_fn) in BUNDLED.items():
        try:
            bg = load_base_graph(_dir(data_dir) / fn, z)
            mapping = load_mapping(_dir(data_dir) / map_fn)
        except (BaseGraphError, OSError, ValueError) as exc:
            bad.append(f"{name}: {exc}")
            continue
        rate = select_rate(bg, len(mapping) - bg.info_cols).rate
        if rate > Fraction(1, 2) or singleton_bound(2, rate) != 2:
            bad.append(f"{name}: rate {rate} cannot reach diversity 2")
    return CheckResult("singleton-rate", not bad, "; ".join(bad))


def random_protograph(rng: np.random.Generator, max_cols: int = 12):
    """Random protograph (every CN of degree >= 2) with a random mapping and block count."""
    while True:
        n = int(rng.integers(3, max_cols + 1))
        m = int(rng.integers(1, n))
        H = (rng.random((m, n)) < 0.45).astype(int)
        H += H * (rng.random((m, n)) < 0.1)  # occasional parallel edges
        # a degree-1 CN pins its bit in every realization (f(0) = 1), so keep CN degree >= 2
        if H.sum(axis=0).min() == 0 or H.sum(axis=1).min() < 2:
            continue
        info = n - m
        punct = [0] if n > 3 and rng.random() < 0.3 else []
        bg = from_dense(H, info_cols=info, punctured=punct, name="random")
        M = int(rng.integers(2, 4))
        assign = tuple(None if i in punct else int(rng.integers(M)) for i in range(n))
        return bg, select_rate(bg, bg.parity_cols), BlockMapping(assign, M)


def check_oracle(count: int = 50, seed: int = 2024, iters: int = 8, dive=dive_run, oracle=fading_msd) -> CheckResult:
    """DivE truth tables against the per-realization reference, bit by bit."""
    rng = np.random.default_rng(seed)
    for case in range(count):
        bg, sel, mapping = random_protograph(rng)
        M = mapping.num_blocks
        report = dive(bg, sel, mapping, M, iters, rootchecks=False)
        for a_idx, a in enumerate(itertools.product((0, 1), repeat=M)):
            bits = oracle(bg, sel, mapping, a[::-1], iters, history=True)
            for ell, vec in enumerate(bits):
                tables = report.per_iteration[min(ell, len(report.per_iteration) - 1)]
                got = [(t >> a_idx) & 1 for t in tables]
                if got != list(vec):
                    return CheckResult("oracle-equivalence", False,
                                       f"case {case}, realization {a[::-1]}, iteration {ell}")
    return CheckResult("oracle-equivalence", True, f"{count} random protographs")


def check_monotone(count: int = 50, seed: int = 2024, iters: int = 8, dive=dive_run) -> CheckResult:
    rng = np.random.default_rng(seed)
    for case in range(count):
        bg, sel, mapping = random_protograph(rng)
        report = dive(bg, sel, mapping, mapping.num_blocks, iters, rootchecks=False)
        for ell, tables in enumerate(report.per_iteration):
            for t in tables:
                if t & 1 or not is_monotone(t, mapping.num_blocks):
                    return CheckResult("monotone-functions", False, f"case {case}, iteration {ell}, table {t:#x}")
    return CheckResult("monotone-functions", True)


def check_backends(data_dir=None) -> CheckResult:
    if _backend.BACKEND == "python":
        return CheckResult("backend-equivalence", True, "compiled kernels not built; nothing to compare")
    fn, z, map_fn = BUNDLED["bg1"]
    bg = load_base_graph(_dir(data_dir) / fn, z)
    mapping = load_mapping(_dir(data_dir) / map_fn)
    sel = select_rate(bg, len(mapping) - bg.info_cols)
    a = dive_run(bg, sel, mapping, 2, rootchecks=False, backend=_backend.kernels)
    b = dive_run(bg, sel, mapping, 2, rootchecks=False, backend=_purepy)
    ok = a.per_iteration == b.per_iteration
    return CheckResult("backend-equivalence", ok, "" if ok else "compiled and NumPy kernels disagree")


def run_all(data_dir=None, dive=dive_run, oracle=fading_msd) -> list[CheckResult]:
    results = [check_checksums(data_dir)]
    results += [check_reference_mapping(name, data_dir, dive) for name in BUNDLED]
    results.append(check_singleton(data_dir))
    results.append(check_oracle(dive=dive, oracle=oracle))
    results.append(check_monotone(dive=dive))
    results.append(check_backends(data_dir))
    return results
