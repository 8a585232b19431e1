"""Command-line interface.

Four subcommands: split a ratings file into per-user train/test pairs,
recommend items for one user, run the NDCG evaluation protocol, and
print walk-coverage diagnostics.  Options resolve in three layers:
command-line flags beat config-file entries beat built-in defaults.
The config file is flat `key=value` lines ('#' starts a comment), with
keys named like the long flags (underscores for dashes).

Exit codes: 0 success, 1 usage errors (bad flags, bad config keys,
impossible requests), 2 data errors (unreadable or empty inputs),
3 numerical failures.
"""

import argparse
import os
import sys
from pathlib import Path

from .datasets import FORMAT_SEPS, SplitSpec, load_ratings, upl_split, write_ratings
from .errors import ColdStartError, DataError, NumericalError, UsageError
from .evaluation import collect_diagnostics, rank_items_for_user, run_evaluation
from .graph import UserPrefGraph, item_pole_operators, user_pref_operators
from .item_walk import ItemWalkConfig
from .preferences import derive_preferences
from .user_walk import UserWalkConfig

DEFAULTS = {
    "format": "tsv_umr",
    "alpha": 0.15,
    "beta": 0.15,
    "tol": 1e-10,
    "max_iter": 100,
    "seed": 0,
    "min_test": 10,
    "repetitions": 5,
    "top_k": 10,
    "cutoffs": [1, 3, 5, 10],
    "jobs": os.cpu_count() or 1,
    "sample": None,
    "upl": None,
    "rep": 0,
}


def _int_list(text: str) -> list:
    try:
        return [int(part) for part in str(text).split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")


_KEY_PARSERS = {
    "format": str,
    "alpha": float,
    "beta": float,
    "tol": float,
    "max_iter": int,
    "seed": int,
    "min_test": int,
    "repetitions": int,
    "top_k": int,
    "cutoffs": _int_list,
    "jobs": int,
    "sample": int,
    "upl": _int_list,
    "rep": int,
}


def load_config(path) -> dict:
    """Parse a flat key=value config file into typed values."""
    values = {}
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}, line {ln}: expected key=value, got {raw.strip()!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KEY_PARSERS:
            raise UsageError(f"{path}, line {ln}: unknown key {key!r}")
        try:
            values[key] = _KEY_PARSERS[key](val)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}, line {ln}: {exc}") from None
    return values


def _resolve(args, config: dict, key: str):
    """Flag if given, else config-file entry, else default."""
    val = getattr(args, key, None)
    if val is None:
        val = config.get(key, DEFAULTS[key])
    return val


def _walk_configs(args, config):
    try:
        walk1 = UserWalkConfig(alpha=_resolve(args, config, "alpha"),
                               tol=_resolve(args, config, "tol"),
                               max_iter=_resolve(args, config, "max_iter"))
        walk2 = ItemWalkConfig(beta=_resolve(args, config, "beta"),
                               tol=_resolve(args, config, "tol"),
                               max_iter=_resolve(args, config, "max_iter"))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return walk1, walk2


def _load(args, config):
    fmt = _resolve(args, config, "format")
    if fmt not in FORMAT_SEPS:
        raise UsageError(f"unknown format {fmt!r}")
    return load_ratings(args.ratings, fmt), fmt


def _require_upls(args, config) -> list:
    upls = _resolve(args, config, "upl")
    if not upls:
        raise UsageError("no profile size given: pass --upl or set upl= in the config")
    return upls


def _progress(args):
    if args.verbose:
        return lambda msg: print(msg, file=sys.stderr)
    return None


def cmd_split(args, config) -> int:
    dataset, fmt = _load(args, config)
    ext = "tsv" if fmt == "tsv_umr" else "csv"
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    repetitions = _resolve(args, config, "repetitions")
    min_test = _resolve(args, config, "min_test")
    seed = _resolve(args, config, "seed")
    for upl in _require_upls(args, config):
        try:
            spec = SplitSpec(upl, min_test=min_test, seed=seed, repetitions=repetitions)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for rep in range(repetitions):
            train, test, kept = upl_split(dataset, spec, rep)
            train_path = out / f"train_upl{upl}_rep{rep}.{ext}"
            test_path = out / f"test_upl{upl}_rep{rep}.{ext}"
            write_ratings(train, train_path, fmt)
            write_ratings(test, test_path, fmt)
            print(f"upl={upl} rep={rep}: kept {kept.size} users, "
                  f"{train.n_ratings} train / {test.n_ratings} test ratings "
                  f"-> {train_path.name}, {test_path.name}")
    return 0


def cmd_recommend(args, config) -> int:
    dataset, _ = _load(args, config)
    walk1, walk2 = _walk_configs(args, config)
    top_k = _resolve(args, config, "top_k")
    ops = user_pref_operators(UserPrefGraph.from_store(derive_preferences(dataset)))
    w_op, t_op = item_pole_operators(dataset.n_items)
    succeeded = 0
    for raw_user in args.user:
        matches = (dataset.raw_user_ids == raw_user).nonzero()[0]
        if matches.size == 0:
            raise UsageError(f"user {raw_user} does not appear in {args.ratings}")
        target = int(matches[0])
        rated, _ = dataset.user_rows(target)
        try:
            outcome = rank_items_for_user(ops, w_op, t_op, target, k=top_k,
                                          exclude=rated, walk1=walk1, walk2=walk2)
        except ColdStartError:
            print(f"warning: user {raw_user} has no strict preferences, skipped",
                  file=sys.stderr)
            continue
        succeeded += 1
        for rank, item in enumerate(outcome.items, start=1):
            raw_item = dataset.raw_item_ids[int(item)]
            print(f"{raw_user}\t{rank}\t{raw_item}\t{outcome.scored.scores[int(item)]:.6f}")
    if succeeded == 0:
        raise ColdStartError("no requested user has any strict preference")
    return 0


def cmd_evaluate(args, config) -> int:
    dataset, _ = _load(args, config)
    walk1, walk2 = _walk_configs(args, config)
    report = run_evaluation(
        dataset,
        upls=_require_upls(args, config),
        cutoffs=_resolve(args, config, "cutoffs"),
        repetitions=_resolve(args, config, "repetitions"),
        seed=_resolve(args, config, "seed"),
        min_test=_resolve(args, config, "min_test"),
        walk1=walk1, walk2=walk2,
        jobs=_resolve(args, config, "jobs"),
        user_sample=_resolve(args, config, "sample"),
        progress=_progress(args),
    )
    print(report.format_table())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "ndcg_report.tsv").write_text(report.to_tsv(), encoding="utf-8")
        print(f"wrote {out / 'ndcg_report.tsv'}", file=sys.stderr)
    return 0


def cmd_diagnose(args, config) -> int:
    dataset, _ = _load(args, config)
    upls = _resolve(args, config, "upl")
    if upls:
        spec = SplitSpec(upls[0], min_test=_resolve(args, config, "min_test"),
                         seed=_resolve(args, config, "seed"))
        dataset, _, _ = upl_split(dataset, spec, _resolve(args, config, "rep"))
    walk1, walk2 = _walk_configs(args, config)
    report = collect_diagnostics(
        UserPrefGraph.from_store(derive_preferences(dataset)),
        sample=_resolve(args, config, "sample"),
        seed=_resolve(args, config, "seed"),
        walk1=walk1, walk2=walk2,
        progress=_progress(args),
    )
    print(report.format_table())
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "diagnostics.tsv").write_text(report.to_tsv(), encoding="utf-8")
        print(f"wrote {out / 'diagnostics.tsv'}", file=sys.stderr)
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1 (argparse's default is 2, which we reserve
    # for data errors)
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prefwalk",
                     description="Collaborative ranking from pairwise preferences.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("ratings", help="ratings file (user, item, rating per line)")
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--format", choices=sorted(FORMAT_SEPS))
        p.add_argument("--seed", type=int)
        p.add_argument("--verbose", "-v", action="store_true")

    def walk_flags(p):
        p.add_argument("--alpha", type=float, help="first-walk restart probability")
        p.add_argument("--beta", type=float, help="second-walk restart probability")
        p.add_argument("--tol", type=float, help="L1 stopping tolerance")
        p.add_argument("--max-iter", dest="max_iter", type=int)

    p = sub.add_parser("split", parents=[], help="write per-user train/test splits")
    common(p)
    p.add_argument("--upl", type=_int_list, help="train ratings per user, comma-separated")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--min-test", dest="min_test", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("recommend", help="rank unseen items for users")
    common(p)
    walk_flags(p)
    p.add_argument("--user", type=_int_list, required=True,
                   help="raw user id(s) from the file, comma-separated")
    p.add_argument("--top-k", dest="top_k", type=int)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="NDCG protocol over splits")
    common(p)
    walk_flags(p)
    p.add_argument("--upl", type=_int_list)
    p.add_argument("--cutoffs", type=_int_list)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--min-test", dest="min_test", type=int)
    p.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    p.add_argument("--sample", type=int, help="evaluate only this many users per rep")
    p.add_argument("--out", help="directory for the machine-readable report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("diagnose", help="walk coverage diagnostics")
    common(p)
    walk_flags(p)
    p.add_argument("--upl", type=_int_list, help="split first and diagnose the train side")
    p.add_argument("--rep", type=int, help="which repetition to diagnose")
    p.add_argument("--min-test", dest="min_test", type=int)
    p.add_argument("--sample", type=int, help="diagnose only this many users")
    p.add_argument("--out", help="directory for the per-user report")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        return args.func(args, config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
