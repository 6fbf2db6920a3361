import math
from fractions import Fraction

import pytest

from entangled_games import catalog
from entangled_games.errors import ValidationError
from entangled_games.games import classical_value, multiround_value, replay
from entangled_games.strategies import entangled_value_of


@pytest.mark.parametrize("name", ["chsh", "magic_square", "magic_square_rows_columns", "odd_cycle_3", "odd_cycle_5"])
def test_classical_values_match_pins(name):
    e = catalog.get(name)
    assert classical_value(e.game).value == e.expected["classical"]
    if e.classical_strategy is not None:
        assert replay(e.game, e.classical_strategy) == e.expected["classical"]


@pytest.mark.parametrize("name", [n for n in catalog.names() if catalog.get(n).entangled_strategy is not None])
def test_bundled_entangled_strategies_replay_to_pins(name):
    e = catalog.get(name)
    assert entangled_value_of(e.entangled_strategy, e.game) == pytest.approx(e.expected["entangled"], abs=1e-9)


def test_magic_square_pins():
    e = catalog.magic_square()
    assert e.expected["classical"] == Fraction(17, 18)
    assert e.entangled_strategy.dims == (4, 4)


def test_chsh_pin_is_tsirelson():
    assert catalog.chsh().expected["entangled"] == pytest.approx(math.cos(math.pi / 8) ** 2, abs=1e-12)


def test_magic_square_lines_cover_grid():
    lines = catalog.magic_square_lines()
    assert len(lines) == 6
    cells = sorted(c for line in lines[:3] for c in line)
    assert cells == sorted((i, j) for i in range(3) for j in range(3))


@pytest.mark.parametrize("r", [1, 2, 3])
def test_toy_multiround_pin(r):
    e = catalog.get(f"toy_multiround_{r}")
    assert multiround_value(e.game).value == e.expected["multiround"]


def test_unknown_name_lists_known_entries():
    with pytest.raises(ValidationError, match="chsh"):
        catalog.get("nope")
