"""Parameterized vector games for first-order specifications on data words.

The package model-checks first-order sentences over finite executions of
systems with arbitrarily many processes, compiles sentences of the
order-free fragment into parameterized vector games, solves those games
exactly at small scale, applies cutoff bounds to decide parameterized
winning questions, and ships a library of reference games including a
counter-machine encoding that witnesses undecidability of the general
problem.

Layering (each module only imports from the ones above it):

  errors        shared exception types
  logic         alphabets, executions, formulas, model checking
  abstraction   counting abstraction: locations and configurations
  normalform    counting normal form, thresholds, satisfiability
  games         vector games: acceptance, transitions, plays
  solver        exact backward-induction solving and verification
  reductions    formula<->game, play<->execution, counter machines
  cutoff        cutoff bounds, decision procedure, winner scans
  formats       text/JSON codecs for every file format
  cli           the `pvg` command-line tool
"""

from .errors import (
    FragmentError,
    InvalidPlayError,
    NormalizeBudgetError,
    ParseError,
    PvgError,
    SolveBudgetError,
)
from .logic import (
    ActionAtom,
    Alphabet,
    And,
    CountAtLeast,
    CountExactly,
    Eq,
    Event,
    Execution,
    Exists,
    FalseF,
    Forall,
    Formula,
    Implies,
    Lt,
    Not,
    Or,
    ProcessUniverse,
    Sim,
    Succ,
    TrueF,
    TypeAtom,
    conj,
    disj,
    expand_counting,
    format_formula,
    fragment_check,
    free_vars,
    model_check,
    parse_formula,
    quantifier_rank,
    require_fragment,
    similar,
)
from .abstraction import (
    Configuration,
    abstract_execution,
    all_locations,
    canonical_execution,
    loc_add,
    loc_of,
    loc_render,
    loc_zero,
    potential,
    profile_realizable,
    realizable_profiles,
)
from .normalform import (
    CountConstraint,
    NormalForm,
    canonical_normal_form,
    holds_on_config,
    nf_holds,
    normalize,
    satisfiable,
    threshold,
)
from .games import (
    ANY,
    ENVIRONMENT,
    SYSTEM,
    ExplicitAcceptance,
    FormulaAcceptance,
    Game,
    LocalCondition,
    MoveCaps,
    Play,
    PlayCheck,
    PredicateRow,
    Row,
    Transition,
    UNLIMITED,
    ZERO,
    accepts,
    applicable,
    apply,
    iter_legal_moves,
    legal_moves,
    validate_play,
)
from .solver import (
    WINNER_ENVIRONMENT,
    WINNER_SYSTEM,
    PositionalStrategy,
    Verdict,
    VerifyResult,
    as_strategy_fn,
    bruteforce_synthesis,
    solve,
    verify_strategy,
)
from .reductions import (
    TcmConfiguration,
    TcmTransition,
    TwoCounterMachine,
    encode_2cm,
    tcm_successors,
    example5_game,
    example5_strategy,
    execution_to_play,
    formula_to_game,
    game_to_formula,
    lemma4_game,
    lemma4_strategy,
    lemma5_game,
    lemma5_strategy,
    library_games,
    play_to_execution,
    tcm_run_bounded,
    tcm_strategy,
)
from .cutoff import (
    CutoffBound,
    Decision,
    ScanResult,
    cutoff_bound,
    decide,
    scan_winning,
)

__version__ = "0.1.0"

__all__ = [
    "ANY",
    "ActionAtom",
    "Alphabet",
    "And",
    "Configuration",
    "CountAtLeast",
    "CountConstraint",
    "CountExactly",
    "CutoffBound",
    "Decision",
    "ENVIRONMENT",
    "Eq",
    "Event",
    "Execution",
    "Exists",
    "ExplicitAcceptance",
    "FalseF",
    "Forall",
    "Formula",
    "FormulaAcceptance",
    "FragmentError",
    "Game",
    "Implies",
    "InvalidPlayError",
    "LocalCondition",
    "Lt",
    "MoveCaps",
    "NormalForm",
    "NormalizeBudgetError",
    "Not",
    "Or",
    "ParseError",
    "Play",
    "PlayCheck",
    "PositionalStrategy",
    "PredicateRow",
    "ProcessUniverse",
    "PvgError",
    "Row",
    "SYSTEM",
    "ScanResult",
    "Sim",
    "SolveBudgetError",
    "Succ",
    "TcmConfiguration",
    "TcmTransition",
    "Transition",
    "TrueF",
    "TwoCounterMachine",
    "TypeAtom",
    "UNLIMITED",
    "Verdict",
    "VerifyResult",
    "WINNER_ENVIRONMENT",
    "WINNER_SYSTEM",
    "ZERO",
    "abstract_execution",
    "accepts",
    "all_locations",
    "applicable",
    "apply",
    "as_strategy_fn",
    "bruteforce_synthesis",
    "canonical_execution",
    "canonical_normal_form",
    "conj",
    "cutoff_bound",
    "decide",
    "disj",
    "encode_2cm",
    "example5_game",
    "example5_strategy",
    "execution_to_play",
    "expand_counting",
    "format_formula",
    "formula_to_game",
    "fragment_check",
    "free_vars",
    "game_to_formula",
    "holds_on_config",
    "iter_legal_moves",
    "legal_moves",
    "lemma4_game",
    "lemma4_strategy",
    "lemma5_game",
    "lemma5_strategy",
    "library_games",
    "loc_add",
    "loc_of",
    "loc_render",
    "loc_zero",
    "model_check",
    "nf_holds",
    "normalize",
    "parse_formula",
    "play_to_execution",
    "potential",
    "profile_realizable",
    "quantifier_rank",
    "realizable_profiles",
    "require_fragment",
    "satisfiable",
    "scan_winning",
    "similar",
    "solve",
    "tcm_run_bounded",
    "tcm_strategy",
    "tcm_successors",
    "threshold",
    "validate_play",
    "verify_strategy",
]
