"""Canonical JSON for games, strategies, transform descriptors and certificates.

Output is canonical: keys sorted, no insignificant whitespace, floats written
with 17 significant digits. Rationals are ``"num/den"`` strings and complex
arrays are flattened row-major with real and imaginary parts interleaved, so
``load(dump(x))`` reproduces ``x`` exactly.

Every loader validates its input through the domain constructors; errors name
the offending JSON path.
"""

from __future__ import annotations

import itertools
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .games import GameSpec, MultiRoundGameSpec
from .immunize import OneRoundTransform, SwapGame, ThreeProverGame
from .rounding import BoundCertificate
from .strategies import EntangledStrategy


# -- canonical writer -------------------------------------------------------

def _format_float(x: float, where: str) -> str:
    if not math.isfinite(x):
        raise ValidationError(f"non-finite float at {where}")
    text = "%.17g" % x
    # keep floats recognizable as floats on reload
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _write(obj, where: str, out: list[str]) -> None:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_format_float(float(obj), where))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ValidationError(f"non-string key {key!r} at {where}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _write(obj[key], f"{where}.{key}", out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _write(item, f"{where}[{i}]", out)
        out.append("]")
    else:
        raise ValidationError(f"cannot serialize {type(obj).__name__} at {where}")


def canonical_dumps(obj) -> str:
    """Canonical JSON text for a tree of dicts, lists and scalars."""
    out: list[str] = []
    _write(obj, "$", out)
    return "".join(out)


def parse_json(text: str, source: str = "<input>"):
    """``json.loads`` with errors reported as ``source:line:column``."""
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}:{exc.lineno}:{exc.colno}: malformed JSON ({exc.msg})") from None


# -- field access with paths ------------------------------------------------

def _get(d, key: str, where: str):
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    if key not in d:
        raise ValidationError(f"{where}: missing key {key!r}")
    return d[key]


def _int(d, key: str, where: str) -> int:
    x = _get(d, key, where)
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValidationError(f"{where}.{key}: expected an integer, got {x!r}")
    return x


def _rational(x, where: str) -> Fraction:
    if isinstance(x, bool) or not isinstance(x, (str, int)):
        raise ValidationError(f"{where}: expected a 'num/den' string, got {x!r}")
    try:
        return Fraction(x)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"{where}: cannot parse rational {x!r}") from None


def _real(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {x!r}")
    return float(x)


# -- rational tables --------------------------------------------------------

def _rational_str(x) -> str:
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


def _nested_rationals(table: np.ndarray):
    return np.vectorize(_rational_str, otypes=[object])(table).tolist()


def _parse_nested(obj, shape: tuple[int, ...], where: str) -> np.ndarray:
    out = np.empty(shape, dtype=object)

    def fill(node, idx: tuple[int, ...], path: str):
        depth = len(idx)
        if depth == len(shape):
            out[idx] = _rational(node, path)
            return
        if not isinstance(node, list) or len(node) != shape[depth]:
            raise ValidationError(f"{path}: expected a list of length {shape[depth]}")
        for i, child in enumerate(node):
            fill(child, idx + (i,), f"{path}[{i}]")

    fill(obj, (), where)
    return out


def _accepted_tuples(pred: np.ndarray, n: int) -> list:
    idx = np.argwhere(pred)
    # order by question tuple first, then answer tuple
    rows = sorted((tuple(int(v) for v in r[n:]), tuple(int(v) for v in r[:n])) for r in idx)
    return [[list(q), list(a)] for q, a in rows]


def _parse_predicate(obj, n: int, nq: int, na: int, where: str) -> np.ndarray:
    if not isinstance(obj, list):
        raise ValidationError(f"{where}: expected a list of [questions, answers] pairs")
    pred = np.zeros((na,) * n + (nq,) * n, dtype=bool)
    for i, pair in enumerate(obj):
        path = f"{where}[{i}]"
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ValidationError(f"{path}: expected [questions, answers]")
        qs, ans = pair
        for label, tup, size in (("questions", qs, nq), ("answers", ans, na)):
            if not (isinstance(tup, list) and len(tup) == n):
                raise ValidationError(f"{path}: {label} must be a list of length {n}")
            if any(isinstance(x, bool) or not isinstance(x, int) or not 0 <= x < size for x in tup):
                raise ValidationError(f"{path}: {label} entries must be integers in [0, {size})")
        pred[tuple(ans) + tuple(qs)] = True
    return pred


# -- games ------------------------------------------------------------------

def game_to_dict(g: GameSpec) -> dict:
    d = {
        "provers": g.provers,
        "questions": g.questions,
        "answers": g.answers,
        "pi": _nested_rationals(g.pi),
        "predicate": _accepted_tuples(g.predicate, g.provers),
    }
    if g.name:
        d["name"] = g.name
    return d


def game_from_dict(d, where: str = "$") -> GameSpec:
    n = _int(d, "provers", where)
    nq = _int(d, "questions", where)
    na = _int(d, "answers", where)
    if min(n, nq, na) < 1:
        raise ValidationError(f"{where}: provers, questions and answers must be positive")
    pi = _parse_nested(_get(d, "pi", where), (nq,) * n, f"{where}.pi")
    pred = _parse_predicate(_get(d, "predicate", where), n, nq, na, f"{where}.predicate")
    return GameSpec(n, nq, na, pi, pred, name=d.get("name", ""))


def multiround_to_dict(m: MultiRoundGameSpec) -> dict:
    r, nq, na = m.rounds, m.questions, m.answers
    pi = [_rational_str(m.pi[qs]) for qs in itertools.product(range(nq), repeat=r)]
    pred = []
    for flat_q, qs in enumerate(itertools.product(range(nq), repeat=r)):
        for flat_a, ans in enumerate(itertools.product(range(na), repeat=r)):
            if m.predicate[ans + qs]:
                pred.append([flat_q, flat_a])
    d = {"rounds": r, "questions": nq, "answers": na, "pi": pi, "predicate": pred}
    if m.name:
        d["name"] = m.name
    return d


def multiround_from_dict(d, where: str = "$") -> MultiRoundGameSpec:
    r = _int(d, "rounds", where)
    nq = _int(d, "questions", where)
    na = _int(d, "answers", where)
    if min(r, nq, na) < 1:
        raise ValidationError(f"{where}: rounds, questions and answers must be positive")
    flat_pi = _get(d, "pi", where)
    if not isinstance(flat_pi, list) or len(flat_pi) != nq**r:
        raise ValidationError(f"{where}.pi: expected a flat list of length {nq**r}")
    pi = np.array([_rational(x, f"{where}.pi[{i}]") for i, x in enumerate(flat_pi)], dtype=object)
    pi = pi.reshape((nq,) * r)
    pred = np.zeros(na**r * nq**r, dtype=bool).reshape((na**r, nq**r))
    entries = _get(d, "predicate", where)
    if not isinstance(entries, list):
        raise ValidationError(f"{where}.predicate: expected a list of [flat_q, flat_a] pairs")
    for i, pair in enumerate(entries):
        ok = isinstance(pair, list) and len(pair) == 2 and all(
            isinstance(x, int) and not isinstance(x, bool) for x in pair)
        if not ok or not (0 <= pair[0] < nq**r and 0 <= pair[1] < na**r):
            raise ValidationError(f"{where}.predicate[{i}]: expected in-range [flat_q, flat_a]")
        pred[pair[1], pair[0]] = True
    pred = pred.reshape((na,) * r + (nq,) * r)
    return MultiRoundGameSpec(r, nq, na, pi, pred, name=d.get("name", ""))


# -- strategies -------------------------------------------------------------

def _interleave(z: np.ndarray) -> list[float]:
    flat = np.asarray(z, dtype=complex).reshape(-1)
    out = np.empty(2 * flat.size)
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tolist()


def _deinterleave(obj, size: int, where: str) -> np.ndarray:
    if not isinstance(obj, list) or len(obj) != 2 * size:
        raise ValidationError(f"{where}: expected {2 * size} interleaved re/im numbers")
    vals = np.array([_real(x, f"{where}[{i}]") for i, x in enumerate(obj)])
    z = np.empty(size, dtype=complex)
    # assign parts separately so signed zeros survive
    z.real = vals[0::2]
    z.imag = vals[1::2]
    return z


def strategy_to_dict(s: EntangledStrategy) -> dict:
    return {
        "dims": list(s.dims),
        "state": _interleave(s.state),
        "measurements": [[[_interleave(m[q, a]) for a in range(m.shape[1])] for q in range(m.shape[0])]
                         for m in s.measurements],
    }


def strategy_from_dict(d, where: str = "$") -> EntangledStrategy:
    dims = _get(d, "dims", where)
    if isinstance(dims, int) and not isinstance(dims, bool):
        dims = [dims, dims]
    if not isinstance(dims, list) or not all(isinstance(x, int) and x >= 1 for x in dims):
        raise ValidationError(f"{where}.dims: expected a list of positive integers")
    state = _deinterleave(_get(d, "state", where), math.prod(dims), f"{where}.state")
    meas = _get(d, "measurements", where)
    if not isinstance(meas, list) or len(meas) != len(dims):
        raise ValidationError(f"{where}.measurements: expected {len(dims)} families")
    families = []
    for p, (fam, dim) in enumerate(zip(meas, dims)):
        path = f"{where}.measurements[{p}]"
        if not isinstance(fam, list) or not fam or not all(isinstance(x, list) and x for x in fam):
            raise ValidationError(f"{path}: expected [question][answer] nested lists")
        na = len(fam[0])
        if any(len(x) != na for x in fam):
            raise ValidationError(f"{path}: every question needs {na} answers")
        arr = np.empty((len(fam), na, dim, dim), dtype=complex)
        for q, row in enumerate(fam):
            for a, mat in enumerate(row):
                arr[q, a] = _deinterleave(mat, dim * dim, f"{path}[{q}][{a}]").reshape(dim, dim)
        families.append(arr)
    return EntangledStrategy(tuple(dims), state, families)


# -- certificates -----------------------------------------------------------

def certificate_to_dict(c: BoundCertificate) -> dict:
    d = {"lemma": c.lemma, "epsilon": float(c.epsilon), "lhs": float(c.lhs), "rhs": float(c.rhs),
         "holds": c.holds, "seed": c.seed}
    if c.index is not None:
        d["index"] = list(c.index)
    return d


def certificate_from_dict(d, where: str = "$") -> BoundCertificate:
    seed = _get(d, "seed", where)
    index = d.get("index")
    cert = BoundCertificate(
        str(_get(d, "lemma", where)),
        _real(_get(d, "epsilon", where), f"{where}.epsilon"),
        _real(_get(d, "lhs", where), f"{where}.lhs"),
        _real(_get(d, "rhs", where), f"{where}.rhs"),
        seed,
        None if index is None else tuple(index),
    )
    stored = d.get("holds")
    if stored is not None and bool(stored) != cert.holds:
        raise ValidationError(f"{where}.holds disagrees with lhs and rhs")
    return cert


CERTIFICATE_COLUMNS = ("lemma", "index", "epsilon", "lhs", "rhs", "holds", "seed")


def certificate_rows(certs) -> list[list[str]]:
    """CSV rows (header first) for a list of certificates."""
    rows = [list(CERTIFICATE_COLUMNS)]
    for c in certs:
        index = "" if c.index is None else " ".join(str(i) for i in c.index)
        rows.append([c.lemma, index, "%.17g" % c.epsilon, "%.17g" % c.lhs, "%.17g" % c.rhs,
                     str(c.holds).lower(), "" if c.seed is None else str(c.seed)])
    return rows


# -- transform descriptors --------------------------------------------------

def transform_to_dict(t) -> dict:
    if isinstance(t, SwapGame):
        return {"transform": "swap", "game": game_to_dict(t.game),
                "pi_classical": _nested_rationals(t.pi_classical),
                "pi_quantum": _nested_rationals(t.pi_quantum)}
    if isinstance(t, ThreeProverGame):
        return {"transform": "three-prover", "game": game_to_dict(t.game), "base": game_to_dict(t.base)}
    if isinstance(t, OneRoundTransform):
        return {"transform": "oneround", "game": game_to_dict(t.game), "source": multiround_to_dict(t.source)}
    raise ValidationError(f"not a transform descriptor: {type(t).__name__}")


def transform_from_dict(d, where: str = "$"):
    kind = _get(d, "transform", where)
    game = game_from_dict(_get(d, "game", where), f"{where}.game")
    if kind == "swap":
        shape = (game.questions,) * 2
        return SwapGame(game, _parse_nested(_get(d, "pi_classical", where), shape, f"{where}.pi_classical"),
                        _parse_nested(_get(d, "pi_quantum", where), shape, f"{where}.pi_quantum"))
    if kind == "three-prover":
        return ThreeProverGame(game, game_from_dict(_get(d, "base", where), f"{where}.base"))
    if kind == "oneround":
        return OneRoundTransform(game, multiround_from_dict(_get(d, "source", where), f"{where}.source"))
    raise ValidationError(f"{where}.transform: unknown transform {kind!r}")


# -- dispatch ---------------------------------------------------------------

def to_dict(obj) -> dict:
    if isinstance(obj, GameSpec):
        return game_to_dict(obj)
    if isinstance(obj, MultiRoundGameSpec):
        return multiround_to_dict(obj)
    if isinstance(obj, EntangledStrategy):
        return strategy_to_dict(obj)
    if isinstance(obj, BoundCertificate):
        return certificate_to_dict(obj)
    return transform_to_dict(obj)


def from_dict(d, where: str = "$"):
    """Rebuild whichever object ``d`` describes, judged by its keys."""
    if not isinstance(d, dict):
        raise ValidationError(f"{where}: expected an object")
    if "transform" in d:
        return transform_from_dict(d, where)
    if "lemma" in d:
        return certificate_from_dict(d, where)
    if "measurements" in d:
        return strategy_from_dict(d, where)
    if "rounds" in d:
        return multiround_from_dict(d, where)
    return game_from_dict(d, where)


def dumps(obj, config: dict | None = None) -> str:
    """Canonical JSON for a domain object, optionally tagged with a ``config`` block."""
    d = to_dict(obj)
    if config is not None:
        d["config"] = config
    return canonical_dumps(d)


def loads(text: str, source: str = "<input>"):
    return from_dict(parse_json(text, source))


def load(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))


def dump(obj, path, config: dict | None = None) -> None:
    Path(path).write_text(dumps(obj, config) + "\n")
