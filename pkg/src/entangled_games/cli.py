"""Command-line front end: value, immunize, seesaw, certify, round, conjecture-scan, catalog.

Every JSON artifact carries a ``config`` block with the verb, inputs and seed
that produced it. Exit status: 0 on success, 1 if any certificate fails,
2 on invalid input or a refused computation.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import catalog, commuting, games, immunize, rounding, serialization as ser, strategies
from .errors import BudgetExceeded, ValidationError, WorkbenchError

TRANSFORMS = ("swap", "three-prover", "oneround")


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--dims expects comma-separated integers, got {text!r}") from None
    if not dims or any(d < 1 for d in dims):
        raise argparse.ArgumentTypeError("--dims entries must be positive")
    return dims


def _config(args: argparse.Namespace) -> dict:
    # the output path is not part of the result, so reruns stay byte-identical
    skip = {"func", "out"}
    cfg = {}
    for key, val in sorted(vars(args).items()):
        if key in skip or val is None:
            continue
        cfg[key] = list(val) if isinstance(val, tuple) else val
    cfg.setdefault("seed", 0)
    return cfg


def _emit(text: str, out: str | None) -> None:
    # output writing stays on the orchestrating thread
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_json(payload: dict, args) -> None:
    payload = dict(payload)
    payload["config"] = _config(args)
    _emit(ser.canonical_dumps(payload), args.out)


def _fraction_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _load_game(path: str):
    obj = ser.load(path)
    if isinstance(obj, (games.GameSpec, games.MultiRoundGameSpec)):
        return obj
    if isinstance(obj, (immunize.SwapGame, immunize.ThreeProverGame, immunize.OneRoundTransform)):
        return obj
    raise ValidationError(f"{path} does not describe a game")


def _load_strategy(path: str, symmetrize: bool = False) -> strategies.EntangledStrategy:
    obj = ser.load(path)
    if not isinstance(obj, strategies.EntangledStrategy):
        raise ValidationError(f"{path} does not describe an entangled strategy")
    if symmetrize and obj.provers == 2 and not obj.is_symmetric():
        # the two-copy lift plays the symmetrized game with the same value
        obj = strategies.lift_to_symmetrized(obj)
    return obj


def _plain_game(obj) -> games.GameSpec:
    if isinstance(obj, games.MultiRoundGameSpec):
        raise ValidationError("expected a one-round game; use the oneround transform first")
    return obj.game if hasattr(obj, "game") else obj


def _transformed(obj, transform: str, symmetrize: bool = False):
    """Descriptor for ``transform`` and the base game's question count before reduction.

    A base game is transformed here; a descriptor is returned as is. The swap
    transform drops never-asked questions first.
    """
    kinds = {"swap": immunize.SwapGame, "three-prover": immunize.ThreeProverGame,
             "oneround": immunize.OneRoundTransform}
    if isinstance(obj, kinds[transform]):
        return obj, None
    if transform == "oneround":
        if not isinstance(obj, games.MultiRoundGameSpec):
            raise ValidationError("the oneround transform needs a multi-round game (a file with 'rounds')")
        return immunize.build_oneround_from_multiround(obj), None
    g = _plain_game(obj)
    if symmetrize and not g.is_symmetric():
        g = games.symmetrize(g)
    if transform == "swap":
        reduced, kept = games.remove_unasked(g)
        return immunize.build_swap_game(reduced), kept
    return immunize.build_three_prover_game(g), None


def _fit_strategy(s: strategies.EntangledStrategy, desc, kept, transform: str) -> strategies.EntangledStrategy:
    """Restrict ``s`` to the kept questions when it was written for the unreduced game."""
    if kept is not None and s.questions != desc.game.questions and s.questions > max(kept):
        s = strategies.EntangledStrategy(s.dims, s.state, [m[kept] for m in s.measurements])
    if s.questions != desc.game.questions or s.answers != desc.game.answers or s.provers != desc.game.provers:
        raise ValidationError(
            f"strategy has (provers, questions, answers) = ({s.provers}, {s.questions}, {s.answers}), "
            f"the {transform} game needs ({desc.game.provers}, {desc.game.questions}, {desc.game.answers})"
        )
    return s


# -- verbs ------------------------------------------------------------------

def cmd_value(args) -> int:
    obj = _load_game(args.game)
    if isinstance(obj, games.MultiRoundGameSpec):
        report = games.multiround_value(obj, budget=args.budget)
        witness = [p.tolist() for p in report.witness.policy]
    else:
        report = games.classical_value(_plain_game(obj), budget=args.budget)
        witness = [list(row) for row in report.witness.answers]
    if args.format == "json":
        _emit_json({"value": _fraction_str(report.value), "decimal": float(report.value),
                    "witness": witness, "enumerated": report.enumerated}, args)
    else:
        _emit(f"{_fraction_str(report.value)}\n{float(report.value):.12g}\nwitness: {witness}", args.out)
    return 0


def cmd_immunize(args) -> int:
    desc, _ = _transformed(_load_game(args.game), args.transform, args.symmetrize)
    _emit(ser.dumps(desc, _config(args)), args.out)
    return 0


def cmd_seesaw(args) -> int:
    g = _plain_game(_load_game(args.game))
    if len(set(args.dims)) != 1:
        raise ValidationError(f"see-saw uses one local dimension for every prover, got --dims {args.dims}")
    res = strategies.seesaw(g, args.dims[0], restarts=args.restarts, iters=args.iters, seed=args.seed)
    cfg = _config(args)
    cfg["value"] = res.value
    cfg["restart"] = res.restart
    _emit(ser.dumps(res.strategy, cfg), args.out)
    sys.stderr.write(f"value {res.value:.12f}\n")
    return 0


def _certificates(desc, s, seed):
    if isinstance(desc, immunize.SwapGame):
        return rounding.certify_swap(desc, s, seed=seed)
    if isinstance(desc, immunize.ThreeProverGame):
        return rounding.certify_three_prover(desc, s, seed=seed)
    return rounding.certify_multiround(desc, s, seed=seed)


def cmd_certify(args) -> int:
    desc, kept = _transformed(_load_game(args.game), args.transform, args.symmetrize)
    s = _fit_strategy(_load_strategy(args.strategy, args.symmetrize), desc, kept, args.transform)
    certs = _certificates(desc, s, args.seed)
    if args.format == "csv":
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(ser.certificate_rows(certs))
        _emit(buf.getvalue(), args.out)
    else:
        _emit_json({"certificates": [ser.certificate_to_dict(c) for c in certs],
                    "all_hold": all(c.holds for c in certs)}, args)
    failed = [c for c in certs if not c.holds]
    for c in failed:
        where = "" if c.index is None else f" {list(c.index)}"
        sys.stderr.write(f"FAILED {c.lemma}{where}: lhs {c.lhs:.6g} > rhs {c.rhs:.6g}\n")
    return 1 if failed else 0


def cmd_round(args) -> int:
    desc, kept = _transformed(_load_game(args.game), args.transform, args.symmetrize)
    s = _fit_strategy(_load_strategy(args.strategy, args.symmetrize), desc, kept, args.transform)
    if isinstance(desc, immunize.OneRoundTransform):
        res = rounding.round_multiround(desc, s)
        ev = immunize.eval_multiround_transform(desc, s)
        abort = sum(float(w) * res.abort[desc.alice_question(qs)] for qs, w in np.ndenumerate(desc.source.pi))
        payload = {"rounded_value": res.value, "entangled_acceptance": ev.total,
                   "abort_probability": float(abort)}
    else:
        if isinstance(desc, immunize.SwapGame):
            base = desc.game
            dist = rounding.sequential_distribution(s, base.pi_float)
            p_q = strategies.outcome_distribution(s, base).table
            acceptance = immunize.eval_swap_game(desc, s).total
        else:
            base = desc.base
            dist = rounding.sequential_distribution_bilateral(s, base.pi_float)
            p_q = strategies.outcome_distribution(s, desc.game).table[:, :, :, :, :, 0].sum(axis=2)
            acceptance = immunize.eval_three_prover(desc, s).acceptance
        payload = {
            "rounded_value": rounding.rounded_value(base, dist),
            "entangled_acceptance": acceptance,
            "statistical_distance": rounding.statistical_distance(dist.pair_table(), p_q, base.pi_float),
            "question_order": list(dist.order),
        }
    _emit_json(payload, args)
    return 0


def cmd_conjecture_scan(args) -> int:
    rows = commuting.delta_vs_epsilon_scan(args.n, args.d, args.scale, args.samples, args.seed)
    if args.format == "json":
        _emit_json({"rows": [[r.epsilon_max, r.delta, r.n, r.d, r.scale, r.seed] for r in rows],
                    "columns": list(commuting.SCAN_COLUMNS)}, args)
    else:
        _emit(commuting.scan_csv(rows), args.out)
    return 0


def cmd_catalog(args) -> int:
    if args.action == "list":
        lines = []
        for name in catalog.names():
            entry = catalog.get(name)
            lines.append(f"{name}\t{entry.description}")
        _emit("\n".join(lines), args.out)
        return 0
    if not args.name:
        raise ValidationError("catalog export needs an entry name")
    entry = catalog.get(args.name)
    outdir = Path(args.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = _config(args)
    cfg["expected"] = {k: (_fraction_str(v) if isinstance(v, Fraction) else v) for k, v in entry.expected.items()}
    written = [outdir / f"{entry.name}.game.json"]
    ser.dump(entry.game, written[0], cfg)
    if entry.entangled_strategy is not None:
        written.append(outdir / f"{entry.name}.strategy.json")
        ser.dump(entry.entangled_strategy, written[1], cfg)
    sys.stdout.write("".join(f"{p}\n" for p in written))
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entangled-games", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = add("value", cmd_value, "exact classical (or multi-round) value by enumeration")
    p.add_argument("game")
    p.add_argument("--budget", type=int, default=games.DEFAULT_BUDGET)
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = add("immunize", cmd_immunize, "write a transformed game descriptor")
    p.add_argument("game")
    p.add_argument("--transform", choices=TRANSFORMS, required=True)
    p.add_argument("--symmetrize", action="store_true", help="symmetrize an asymmetric two-prover game first")

    p = add("seesaw", cmd_seesaw, "see-saw lower bound on the entangled value")
    p.add_argument("game")
    p.add_argument("--dims", type=_dims, default=(2,))
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--iters", type=int, default=200)

    for name, func, text in (("certify", cmd_certify, "check every bound for a strategy on a transformed game"),
                             ("round", cmd_round, "round an entangled strategy to a classical one")):
        p = add(name, func, text)
        p.add_argument("game", help="base game or transform descriptor")
        p.add_argument("strategy")
        p.add_argument("--transform", choices=TRANSFORMS, required=True)
        p.add_argument("--symmetrize", action="store_true", help="symmetrize an asymmetric two-prover base game and lift its strategy first")
        if name == "certify":
            p.add_argument("--format", choices=("json", "csv"), default="json")

    p = add("conjecture-scan", cmd_conjecture_scan, "epsilon/delta scan over perturbed commuting projectors")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--scale", type=float, default=0.1)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = add("catalog", cmd_catalog, "list or export built-in games")
    p.add_argument("action", choices=("list", "export"))
    p.add_argument("name", nargs="?")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        sys.stderr.write(f"refused: {exc}\n")
        return 2
    except WorkbenchError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
