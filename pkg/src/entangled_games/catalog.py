"""Reference games with bundled strategies and pinned values.

Every entry documents its expected values; the test suite replays the
bundled strategies against them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ValidationError
from .games import DeterministicStrategy, GameSpec, MultiRoundGameSpec, multiround_value
from .strategies import EntangledStrategy


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    game: object
    classical_strategy: DeterministicStrategy | None = None
    entangled_strategy: EntangledStrategy | None = None
    expected: dict = field(default_factory=dict)
    description: str = ""


def _uniform(shape: tuple[int, ...], support) -> np.ndarray:
    pi = np.empty(shape, dtype=object)
    pi[...] = Fraction(0)
    support = list(support)
    for idx in support:
        pi[idx] = Fraction(1, len(support))
    return pi


def _bell_state() -> np.ndarray:
    return np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)


def _angle_pvm(theta: float) -> np.ndarray:
    v = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    p0 = np.outer(v, v.conj())
    return np.array([p0, np.eye(2) - p0])


def chsh() -> CatalogEntry:
    """Two binary questions, two binary answers, accept iff ``a XOR b = x AND y``."""
    pi = _uniform((2, 2), itertools.product(range(2), repeat=2))
    pred = np.zeros((2, 2, 2, 2), dtype=bool)
    for a, b, x, y in itertools.product(range(2), repeat=4):
        pred[a, b, x, y] = (a ^ b) == (x & y)
    game = GameSpec(2, 2, 2, pi, pred, name="chsh")
    # real measurements at angles 0, pi/4 (first prover) and +-pi/8 on |Phi+>
    alice = np.array([_angle_pvm(0.0), _angle_pvm(math.pi / 4)])
    bob = np.array([_angle_pvm(math.pi / 8), _angle_pvm(-math.pi / 8)])
    ent = EntangledStrategy((2, 2), _bell_state(), [alice, bob])
    det = DeterministicStrategy([[0, 0], [0, 0]])
    return CatalogEntry(
        "chsh", game, det, ent,
        expected={"classical": Fraction(3, 4), "entangled": math.cos(math.pi / 8) ** 2},
        description="CHSH XOR game",
    )


# Magic Square -------------------------------------------------------------

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Mermin-Peres square: each row multiplies to +Id, each column to -Id.
_SQUARE = [
    [np.kron(_X, _I), np.kron(_I, _X), np.kron(_X, _X)],
    [np.kron(_I, _Z), np.kron(_Z, _I), np.kron(_Z, _Z)],
    [-np.kron(_X, _Z), -np.kron(_Z, _X), np.kron(_Y, _Y)],
]


def magic_square_lines() -> list[list[tuple[int, int]]]:
    """Six lines of the 3x3 grid: rows 0-2 then columns 0-2, cells in order."""
    rows = [[(r, c) for c in range(3)] for r in range(3)]
    cols = [[(r, c) for r in range(3)] for c in range(3)]
    return rows + cols


def _line_parity_ok(line: int, bits: tuple[int, int, int]) -> bool:
    # rows need even parity, columns odd
    return sum(bits) % 2 == (0 if line < 3 else 1)


def magic_square() -> CatalogEntry:
    """Line-versus-cell Magic Square game.

    The first prover receives one of six lines (three rows, three columns) and
    answers 3 bits, encoded as ``4 b_0 + 2 b_1 + b_2`` in line order; rows must
    have even parity and columns odd parity. The second prover receives one of
    the three cells on that line, labeled ``3 r + c``, and answers one bit. The
    verifier accepts if the parity holds and the bits agree on the cell. The 18
    (line, cell) pairs are uniform. Alphabets are padded to 9 questions and 8
    answers; questions 6-8 are never asked of the first prover and answers
    above 1 from the second prover always lose.
    """
    lines = magic_square_lines()
    nq, na = 9, 8
    support = [(l, 3 * r + c) for l, line in enumerate(lines) for (r, c) in line]
    pi = _uniform((nq, nq), support)
    pred = np.zeros((na, na, nq, nq), dtype=bool)
    for l, line in enumerate(lines):
        for pos, (r, c) in enumerate(line):
            for code in range(8):
                bits = ((code >> 2) & 1, (code >> 1) & 1, code & 1)
                if not _line_parity_ok(l, bits):
                    continue
                pred[code, bits[pos], l, 3 * r + c] = True
    game = GameSpec(2, nq, na, pi, pred, name="magic_square")

    # Perfect strategy on two Bell pairs. Cell (r, c) has observable O; a bit b
    # corresponds to eigenvalue (-1)^b. The line prover projects jointly onto
    # the commuting observables of its line; the cell prover measures O^T.
    d = 4
    alice = np.zeros((nq, na, d, d), dtype=complex)
    alice[6:, 0] = np.eye(d)
    for l, line in enumerate(lines):
        for code in range(8):
            bits = ((code >> 2) & 1, (code >> 1) & 1, code & 1)
            proj = np.eye(d, dtype=complex)
            for (r, c), b in zip(line, bits):
                proj = proj @ (np.eye(d) + (-1) ** b * _SQUARE[r][c]) / 2
            alice[l, code] = proj
    bob = np.zeros((nq, na, d, d), dtype=complex)
    for r, c in itertools.product(range(3), repeat=2):
        o = _SQUARE[r][c].T
        bob[3 * r + c, 0] = (np.eye(d) + o) / 2
        bob[3 * r + c, 1] = (np.eye(d) - o) / 2
    state = np.kron(_bell_state(), _bell_state())
    # reorder (A1, B1, A2, B2) -> (A1, A2, B1, B2)
    state = state.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(-1)
    ent = EntangledStrategy((d, d), state, [alice, bob])

    # Grid with a bottom row of ones: every column is odd, rows 0-1 are even.
    # Row 2 answers (1, 1, 0) and loses only on cell (2, 2).
    det_line = [0, 0, 6, 1, 1, 1, 0, 0, 0]
    det_cell = [0, 0, 0, 0, 0, 0, 1, 1, 1]
    det = DeterministicStrategy([det_line, det_cell])
    return CatalogEntry(
        "magic_square", game, det, ent,
        expected={"classical": Fraction(17, 18), "entangled": 1.0},
        description="Magic Square, line-vs-cell formulation",
    )


def magic_square_rows_columns() -> CatalogEntry:
    """Rows-versus-columns Magic Square: one row and one column, uniform over 9 pairs.

    The verifier checks row parity (even), column parity (odd) and agreement on
    the shared cell. Its classical value is 8/9.
    """
    nq, na = 3, 8
    pi = _uniform((nq, nq), itertools.product(range(3), repeat=2))
    pred = np.zeros((na, na, nq, nq), dtype=bool)
    for r, c, x, y in itertools.product(range(3), range(3), range(8), range(8)):
        rb = ((x >> 2) & 1, (x >> 1) & 1, x & 1)
        cb = ((y >> 2) & 1, (y >> 1) & 1, y & 1)
        if sum(rb) % 2 == 0 and sum(cb) % 2 == 1 and rb[c] == cb[r]:
            pred[x, y, r, c] = True
    game = GameSpec(2, nq, na, pi, pred, name="magic_square_rows_columns")
    return CatalogEntry(
        "magic_square_rows_columns", game,
        expected={"classical": Fraction(8, 9)},
        description="Magic Square, rows-vs-columns formulation",
    )


def odd_cycle(n: int) -> CatalogEntry:
    """Odd cycle coloring game on ``n`` vertices, edge-versus-vertex.

    The verifier picks an edge ``(v, v+1)`` and one of its endpoints, both
    uniformly. The first prover gets the vertex; the second prover gets the
    edge, labeled by ``v``, and answers a color for each endpoint as a 2-bit
    code. The verifier accepts if the endpoint colors differ and the colors
    agree on the shared vertex.
    """
    if n < 3 or n % 2 == 0:
        raise ValidationError(f"odd_cycle needs an odd n >= 3, got {n}")
    nq, na = n, 4
    support = [(v, e) for e in range(n) for v in (e, (e + 1) % n)]
    pi = _uniform((nq, nq), support)
    pred = np.zeros((na, na, nq, nq), dtype=bool)
    for e in range(n):
        for code in range(4):
            c0, c1 = (code >> 1) & 1, code & 1
            if c0 == c1:
                continue
            pred[c0, code, e, e] = True
            pred[c1, code, (e + 1) % n, e] = True
    game = GameSpec(2, nq, na, pi, pred, name=f"odd_cycle_{n}")
    return CatalogEntry(
        f"odd_cycle_{n}", game,
        expected={"classical": Fraction(2 * n - 1, 2 * n)},
        description=f"odd cycle game, n={n}",
    )


def toy_multiround(r: int) -> CatalogEntry:
    """Fixed ``r``-round binary game used as a pipeline fixture.

    Questions are i.i.d. with ``P(q = 1) = 1/3``. Round ``k < r`` asks the prover
    to predict the next question; the last round must return the XOR of all
    questions. The prover wins if the XOR is right and at least half (rounded
    up) of the ``r - 1`` predictions are right.
    """
    if not 1 <= r <= 4:
        raise ValidationError(f"toy_multiround supports 1 <= r <= 4, got {r}")
    nq = na = 2
    p1 = Fraction(1, 3)
    pi = np.empty((nq,) * r, dtype=object)
    for qs in itertools.product(range(2), repeat=r):
        pi[qs] = math.prod((p1 if q else 1 - p1 for q in qs), start=Fraction(1))
    pred = np.zeros((na,) * r + (nq,) * r, dtype=bool)
    need = math.ceil((r - 1) / 2)
    for qs in itertools.product(range(2), repeat=r):
        for ans in itertools.product(range(2), repeat=r):
            hits = sum(ans[k] == qs[k + 1] for k in range(r - 1))
            parity = ans[-1] == sum(qs) % 2
            pred[ans + qs] = parity and hits >= need
    game = MultiRoundGameSpec(r, nq, na, pi, pred, name=f"toy_multiround_{r}")
    report = multiround_value(game)
    return CatalogEntry(
        f"toy_multiround_{r}", game,
        expected={"multiround": report.value},
        description=f"{r}-round prediction game",
    )


CATALOG = {
    "chsh": chsh,
    "magic_square": magic_square,
    "magic_square_rows_columns": magic_square_rows_columns,
    "odd_cycle_3": lambda: odd_cycle(3),
    "odd_cycle_5": lambda: odd_cycle(5),
    "toy_multiround_1": lambda: toy_multiround(1),
    "toy_multiround_2": lambda: toy_multiround(2),
    "toy_multiround_3": lambda: toy_multiround(3),
}


def names() -> list[str]:
    return sorted(CATALOG)


def get(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]()
    except KeyError:
        raise ValidationError(f"unknown catalog entry {name!r}; known: {', '.join(names())}") from None
