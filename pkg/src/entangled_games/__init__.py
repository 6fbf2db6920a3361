"""Exact and numerical tools for entangled multi-prover games.

Modules: ``linalg`` (dense complex linear algebra), ``games`` (games and exact
classical values), ``strategies`` (entangled strategies and see-saw search),
``immunize`` (game transforms), ``rounding`` (rounding and bound
certificates), ``commuting`` (almost-commuting projectors), ``catalog``
(reference games), ``serialization`` (canonical JSON) and ``cli``.
"""

from .errors import BoundViolation, BudgetExceeded, PreconditionError, ValidationError, WorkbenchError
from .games import (
    DeterministicStrategy,
    GameSpec,
    MultiRoundGameSpec,
    MultiRoundStrategy,
    classical_value,
    multiround_value,
    replay,
    symmetrize,
)
from .strategies import EntangledStrategy, entangled_value_of, outcome_distribution, seesaw

__version__ = "0.1.0"

__all__ = [
    "BoundViolation", "BudgetExceeded", "PreconditionError", "ValidationError", "WorkbenchError",
    "DeterministicStrategy", "GameSpec", "MultiRoundGameSpec", "MultiRoundStrategy",
    "classical_value", "multiround_value", "replay", "symmetrize",
    "EntangledStrategy", "entangled_value_of", "outcome_distribution", "seesaw",
]
