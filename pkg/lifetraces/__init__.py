"""
lifetraces: trace automata, orphan search and semilinear preimages for
two-dimensional cellular automata, with the Game of Life as the worked case.
"""

__version__ = "1.0.0"

from .ca_core import FiniteConfig, LocalRule, Pattern, derive_forbidden, game_of_life, load_rule_spec, pad0
from .exceptions import LifeTracesError
from .preimage import PreimageProblem, Verdict, find_preimage, is_finite_goe, is_orphan
from .semilinear import SemilinearConfig, periodize, verify_image
from .traces import TraceConstants, check_periodizable, check_stable, game_of_life_constants

__all__ = [
    "FiniteConfig",
    "LifeTracesError",
    "LocalRule",
    "Pattern",
    "PreimageProblem",
    "SemilinearConfig",
    "TraceConstants",
    "Verdict",
    "check_periodizable",
    "check_stable",
    "derive_forbidden",
    "find_preimage",
    "game_of_life",
    "game_of_life_constants",
    "is_finite_goe",
    "is_orphan",
    "load_rule_spec",
    "pad0",
    "periodize",
    "verify_image",
]
