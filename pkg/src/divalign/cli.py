"""Command-line entry point: ``divalign {analyze,search,simulate,lift,verify}``.

Exit codes: 0 success, 1 validation failure, 2 search failure.
Every flag can also be given in a ``key=value`` config file (``--config``);
flags on the command line win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from . import verify
from .dive import DEFAULT_ITERS, dive_run
from .mapping import BlockMapping, MappingError, format_mapping, load_mapping
from .mapsearch import SearchConfig, SearchResult, random_mapping, search_da_mapping
from .protograph import (BaseGraph, BaseGraphError, bundled_base_graph, load_base_graph, parity_cols_for_rate,
                         select_rate)
from .qclift import expand_mapping, lift, save_alist
from .simkit import ChannelConfig, DecoderConfig, run_bler

EXIT_OK, EXIT_INVALID, EXIT_SEARCH_FAIL = 0, 1, 2

log = logging.getLogger("divalign")


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument handling

def _snr_grid(text: str) -> tuple[float, ...]:
    """``a:b:step`` (inclusive) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad SNR grid {text!r}, expected a:b:step")
        a, b, step = map(float, parts)
        if step <= 0 or b < a:
            raise UsageError(f"bad SNR grid {text!r}")
        n = int(round((b - a) / step)) + 1
        return tuple(round(a + k * step, 10) for k in range(n))
    return tuple(float(x) for x in text.split(",") if x.strip())


def _random_seed(text: str) -> int:
    return int(text.split("=", 1)[1] if text.startswith("seed=") else text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file mirroring the flags")
    common.add_argument("--bg", help="base graph file, or a bundled name (bg1, bg2)")
    common.add_argument("--z", type=int, help="lifting size for a base graph file")
    rate = common.add_mutually_exclusive_group()
    rate.add_argument("--parity-cols", type=int)
    rate.add_argument("--rate", help="target rate k/n; the smallest parity count not above it is used")
    common.add_argument("--mapping", help="block mapping file")
    common.add_argument("--m", type=int, help="number of fading blocks")
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int, help="search: trials per candidate; simulate: codewords per point")
    common.add_argument("--snr", help="SNR grid in dB, a:b:step")
    common.add_argument("--out", help="output directory")
    common.add_argument("--random-mapping", help="simulate a seeded random mapping too (SEED or seed=SEED)")
    common.add_argument("--balanced", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--max-iters", type=int, help="DivE iterations (analyze/search) or decoder iterations")
    common.add_argument("--stop-errors", type=int, help="simulate: stop a point after this many block errors")
    common.add_argument("--workers", type=int)
    common.add_argument("--batch-size", type=int)
    common.add_argument("--data-dir", help="verify: directory holding the bundled data files")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="divalign", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("analyze", "diversity evolution of a block mapping"),
                       ("search", "search for a diversity-aligned mapping (M=2)"),
                       ("simulate", "Monte Carlo BLER over a Rayleigh block-fading channel"),
                       ("lift", "write the lifted parity-check matrix as alist"),
                       ("verify", "run the bundled self-checks")]:
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


DEFAULTS = {"m": 2, "seed": 0, "out": ".", "balanced": True, "workers": 1, "batch_size": 500}


def read_config(path: str | Path) -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def resolve(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Fill unset flags from the config file, then from defaults."""
    cfg = read_config(args.config) if args.config else {}
    actions = {a.dest: a for a in parser._subparsers._group_actions[0].choices[args.command]._actions}
    for key, raw in cfg.items():
        if key not in actions or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is not None:
            continue
        action = actions[key]
        if isinstance(action, argparse.BooleanOptionalAction) or key == "verbose":
            value = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            value = action.type(raw)
        else:
            value = raw
        setattr(args, key, value)
    if args.parity_cols is not None and args.rate is not None:
        raise UsageError("give either parity_cols or rate, not both")
    for key, value in DEFAULTS.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _load_graph(args) -> BaseGraph:
    if not args.bg:
        raise UsageError("--bg is required")
    if args.bg in ("bg1", "bg2") and not Path(args.bg).exists():
        bg = bundled_base_graph(args.bg)
        if args.z is not None and args.z != bg.lifting_size:
            raise UsageError(f"bundled {args.bg} is stored for Z={bg.lifting_size}")
        return bg
    if args.z is None:
        raise UsageError("--z is required with a base graph file")
    return load_base_graph(args.bg, args.z)


def _parity_cols(args, bg: BaseGraph, mapping: BlockMapping | None = None) -> int | None:
    if args.parity_cols is not None:
        return args.parity_cols
    if args.rate is not None:
        return parity_cols_for_rate(bg, Fraction(args.rate))
    if mapping is not None:
        return len(mapping) - bg.info_cols
    return None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _rate_str(bg: BaseGraph, sel) -> str:
    return f"{bg.info_cols}/{len(sel.transmitted_cols)}"


# ---------------------------------------------------------------------------
# subcommands

def cmd_analyze(args) -> int:
    if not args.mapping:
        raise UsageError("analyze needs --mapping")
    bg = _load_graph(args)
    mapping = load_mapping(args.mapping)
    sel = select_rate(bg, _parity_cols(args, bg, mapping))
    iters = args.max_iters if args.max_iters is not None else DEFAULT_ITERS
    report = dive_run(bg, sel, mapping, args.m, iters)
    out = _out_dir(args)
    (out / "vn_report.txt").write_text(report.format_vn_report(), encoding="utf-8")
    (out / "iterations.csv").write_text(report.format_iteration_csv(), encoding="utf-8")
    events = ["iter,cn,target_vn,block"] + [f"{ell},{j},{i},{m}" for ell, j, i, m in report.rootcheck_events]
    (out / "rootchecks.csv").write_text("\n".join(events) + "\n", encoding="utf-8")
    first = report.first_full_iteration()
    print(f"rate {_rate_str(bg, sel)}: {report.full_div_count_info[-1]}/{bg.info_cols} info VNs at full diversity"
          + (f" (all from iteration {first})" if first is not None else ""))
    if not report.all_info_full:
        print("deficient info VNs: " + " ".join(map(str, report.deficient_info_vns())))
        return EXIT_INVALID
    return EXIT_OK


def cmd_search(args) -> int:
    bg = _load_graph(args)
    if args.m != 2:
        raise UsageError("search supports M=2 only")
    pinned = _parity_cols(args, bg)
    kw = {}
    if args.trials is not None:
        kw["max_trials"] = args.trials
    if args.max_iters is not None:
        kw["iters"] = args.max_iters
    cfg = SearchConfig(rng_seed=args.seed, balanced=args.balanced, start_parity_cols=pinned,
                       max_parity_cols=pinned, workers=args.workers, **kw)
    result = search_da_mapping(bg, cfg)
    out = _out_dir(args)
    summary = {"graph": bg.name, "seed": args.seed, "max_trials": cfg.max_trials, "trials_used": result.trials_used}
    if isinstance(result, SearchResult):
        sel = select_rate(bg, result.parity_cols)
        rate = _rate_str(bg, sel)
        summary.update(status="ok", rate=rate, parity_cols=result.parity_cols,
                       iterations_to_full=result.iterations_to_full, candidate_index=result.candidate_index,
                       trial_index=result.trial_index)
        meta = {"graph": bg.name, "parity_cols": result.parity_cols, "rate": rate, "seed": args.seed,
                "trials_used": result.trials_used}
        (out / "mapping.map").write_text(format_mapping(result.mapping, meta), encoding="utf-8")
        print(f"found mapping at rate {rate} after {result.trials_used} trials")
        code = EXIT_OK
    else:
        summary.update(status="fail", reason=result.reason, tried_parity_cols=result.tried_parity_cols,
                       best_info_full=result.best_info_full)
        print(f"search failed: {result.reason} (parity columns tried: {result.tried_parity_cols})")
        code = EXIT_SEARCH_FAIL
    (out / "search_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return code


def cmd_simulate(args) -> int:
    if not args.mapping and args.random_mapping is None:
        raise UsageError("simulate needs --mapping and/or --random-mapping")
    if not args.snr:
        raise UsageError("simulate needs --snr")
    trials = args.trials if args.trials is not None else 10_000
    if trials < 1:
        raise UsageError("--trials must be >= 1")
    bg = _load_graph(args)
    mapping = load_mapping(args.mapping) if args.mapping else None
    parity = _parity_cols(args, bg, mapping)
    if parity is None:
        raise UsageError("--parity-cols or --rate is required with a random mapping alone")
    sel = select_rate(bg, parity)
    runs = []
    if mapping is not None:
        mapping.check(bg, sel)
        runs.append(("mapping", mapping))
    if args.random_mapping is not None:
        seed = _random_seed(args.random_mapping)
        runs.append((f"random_seed{seed}", random_mapping(bg, sel, seed, args.balanced)))
    ccfg = ChannelConfig(args.m, _snr_grid(args.snr))
    dcfg = DecoderConfig(max_iters=args.max_iters if args.max_iters is not None else 50)
    code = lift(bg, sel)
    out = _out_dir(args)
    for label, m in runs:
        res = run_bler(code, m, ccfg, dcfg, trials, args.seed, args.stop_errors, batch_size=args.batch_size,
                       workers=args.workers)
        path = out / f"bler_{label}.csv"
        path.write_text(res.to_csv(), encoding="utf-8")
        print(f"{label}: " + ", ".join(f"{p.snr_db:g} dB {p.bler:.3e}" for p in res.points) + f" -> {path}")
    return EXIT_OK


def cmd_lift(args) -> int:
    bg = _load_graph(args)
    parity = _parity_cols(args, bg)
    sel = select_rate(bg, parity if parity is not None else bg.parity_cols)
    code = lift(bg, sel)
    out = _out_dir(args)
    save_alist(code, out / "H.alist")
    if args.mapping:
        mapping = load_mapping(args.mapping)
        mapping.check(bg, sel)
        blocks = expand_mapping(mapping, code.Z)
        (out / "bit_blocks.txt").write_text("\n".join(map(str, blocks.tolist())) + "\n", encoding="utf-8")
    print(f"lifted {code.n_rows}x{code.n_cols} (K={code.K}, N={code.N}) -> {out / 'H.alist'}")
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify.run_all(args.data_dir)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.ok for r in results) else EXIT_INVALID


COMMANDS = {"analyze": cmd_analyze, "search": cmd_search, "simulate": cmd_simulate, "lift": cmd_lift,
            "verify": cmd_verify}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = resolve(args, parser)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"divalign {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (BaseGraphError, MappingError, OSError, ValueError) as exc:
        print(f"divalign {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
