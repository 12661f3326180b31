"""Exact game solving by backward induction.

The game tree is finite: every effective move strictly increases the total
letter count, which is capped by (number of tokens) * |A| * B. Positions are
therefore solved by memoized recursion on (configuration, side to move),
and positional strategies suffice.

The head of a play is special: System may open by passing, which is legal
exactly when the initial configuration is already accepting, and hands the
move to Environment without changing anything. At every later System turn
the current configuration rejects (Environment just moved), so a pass would
land on a rejecting configuration and is never legal. A player who cannot
move ends the play; the play is won by System iff it ends in an accepting
configuration reached by System (or by the opening pass from an accepting
start).

`bruteforce_synthesis` is an intentionally separate decision procedure for
the same question asked on executions instead of token games: players extend
an execution block-wise, System flipping the sentence to true, Environment
to false. It shares only the logic layer, so it can serve as an independent
oracle for the formula-to-game compilation.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, field
from typing import Callable

from .abstraction import Configuration
from .errors import SolveBudgetError
from .games import (
    ENVIRONMENT,
    SYSTEM,
    UNLIMITED,
    DEFAULT_BRANCH_BUDGET,
    Game,
    MoveCaps,
    Play,
    Transition,
    accepts,
    applicable,
    apply,
    iter_legal_moves,
)
from .logic import (
    Alphabet,
    Event,
    Execution,
    Formula,
    ProcessUniverse,
    model_check,
    quantifier_rank,
    require_fragment,
)

WINNER_SYSTEM = "System"
WINNER_ENVIRONMENT = "Environment"

#: Default cap on memoized positions before solve refuses.
DEFAULT_NODE_BUDGET = 10_000_000


@dataclass(frozen=True)
class Verdict:
    """Who wins from the queried position, and how much was explored."""

    winner: str
    explored: int

    def __post_init__(self):
        if self.winner not in (WINNER_SYSTEM, WINNER_ENVIRONMENT):
            raise ValueError(f"unknown winner {self.winner!r}")


@dataclass
class PositionalStrategy:
    """System's winning choices, one transition per system-turn configuration.

    The opening pass is stored as the empty transition.
    """

    moves: dict[Configuration, Transition] = field(default_factory=dict)

    def lookup(self, config: Configuration) -> Transition | None:
        return self.moves.get(config)

    def __call__(self, config: Configuration) -> Transition | None:
        return self.lookup(config)

    def __len__(self) -> int:
        return len(self.moves)


StrategyFn = Callable[[Configuration], Transition | None]


def as_strategy_fn(strategy: PositionalStrategy | StrategyFn) -> StrategyFn:
    if isinstance(strategy, PositionalStrategy):
        return strategy.lookup
    if callable(strategy):
        return strategy
    raise TypeError("expected a PositionalStrategy or a callable")


def solve(
    game: Game,
    initial: Configuration,
    caps: MoveCaps = UNLIMITED,
    node_budget: int | None = DEFAULT_NODE_BUDGET,
    branch_budget: int | None = DEFAULT_BRANCH_BUDGET,
) -> tuple[Verdict, PositionalStrategy | None]:
    """Decide the game from `initial` and extract a strategy on a System win.

    Raises SolveBudgetError when the memo table would exceed `node_budget`
    or a single configuration's move enumeration would exceed
    `branch_budget`; a budget refusal is never silently turned into a
    verdict.
    """
    memo: dict[tuple[Configuration, str], bool] = {}
    best: dict[Configuration, Transition] = {}
    limit = sys.getrecursionlimit()
    depth_need = 4 * (sum(initial.totals()) * len(game.alphabet.actions) * game.bound + 8)
    if limit < depth_need:
        sys.setrecursionlimit(depth_need)

    def remember(key, value: bool) -> bool:
        if node_budget is not None and len(memo) >= node_budget:
            raise SolveBudgetError(
                f"solve exceeded the node budget of {node_budget} positions"
            )
        memo[key] = value
        return value

    def win_sys(config: Configuration) -> bool:
        """System to move and required to move (not the head)."""
        key = (config, SYSTEM)
        if key in memo:
            return memo[key]
        for tau, nxt in iter_legal_moves(game, config, SYSTEM, caps, branch_budget):
            if win_env(nxt):
                best.setdefault(config, tau)
                return remember(key, True)
        return remember(key, False)

    def win_env(config: Configuration) -> bool:
        """Environment to move at an accepting configuration."""
        key = (config, ENVIRONMENT)
        if key in memo:
            return memo[key]
        for _, nxt in iter_legal_moves(game, config, ENVIRONMENT, caps, branch_budget):
            if not win_sys(nxt):
                return remember(key, False)
        return remember(key, True)

    system_wins = False
    if accepts(game, initial) and win_env(initial):
        system_wins = True
        best[initial] = Transition.empty(SYSTEM)
    if not system_wins:
        system_wins = win_sys(initial)
    verdict = Verdict(
        WINNER_SYSTEM if system_wins else WINNER_ENVIRONMENT, explored=len(memo)
    )
    return verdict, (PositionalStrategy(dict(best)) if system_wins else None)


# ---------------------------------------------------------------------------
# Strategy verification


@dataclass(frozen=True)
class VerifyResult:
    """Outcome of verify_strategy; truthy iff the strategy always wins."""

    ok: bool
    counterexample: Play | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_strategy(
    game: Game,
    initial: Configuration,
    strategy: PositionalStrategy | StrategyFn,
    caps: MoveCaps = UNLIMITED,
    branch_budget: int | None = DEFAULT_BRANCH_BUDGET,
) -> VerifyResult:
    """Check a System strategy against every Environment reply.

    Explores the full tree of strategy-compatible plays. Fails if the
    strategy is undefined at a reachable System turn, proposes an illegal
    move, or some maximal play ends in a rejecting configuration.
    """
    fn = as_strategy_fn(strategy)

    # Positional strategies make the outcome at a configuration independent
    # of how it was reached, so subtrees that verified once are not
    # re-explored.  Failures short-circuit out immediately and keep the
    # play that first reached them as the counterexample.
    verified_sys: set[tuple[Configuration, bool]] = set()
    verified_env: set[Configuration] = set()

    def fail(play: Play, reason: str) -> VerifyResult:
        return VerifyResult(False, play, reason)

    def at_system(play: Play, is_head: bool) -> VerifyResult:
        config = play.final
        if (config, is_head) in verified_sys:
            return VerifyResult(True)
        tau = fn(config)
        if tau is None:
            return fail(play, "strategy undefined at a reachable configuration")
        if tau.is_pass:
            if not is_head:
                return fail(play, "strategy passed after the opening turn")
            if not accepts(game, config):
                return fail(play, "opening pass from a rejecting configuration")
            result = at_environment(play.extended(tau, config))
        else:
            try:
                if not applicable(tau, config):
                    return fail(play, "strategy move is not applicable")
                nxt = apply(tau, config)
            except ValueError as exc:
                return fail(play, f"strategy move is malformed: {exc}")
            if not accepts(game, nxt):
                return fail(
                    play.extended(tau, nxt),
                    "strategy move lands on a rejecting configuration",
                )
            result = at_environment(play.extended(tau, nxt))
        if result.ok:
            verified_sys.add((config, is_head))
        return result

    def at_environment(play: Play) -> VerifyResult:
        config = play.final
        if config in verified_env:
            return VerifyResult(True)
        for tau, nxt in iter_legal_moves(game, config, ENVIRONMENT, caps, branch_budget):
            result = at_system(play.extended(tau, nxt), is_head=False)
            if not result.ok:
                return result
        verified_env.add(config)
        return VerifyResult(True)

    sys.setrecursionlimit(max(sys.getrecursionlimit(), 100_000))
    return at_system(Play(initial), is_head=True)


# ---------------------------------------------------------------------------
# Direct synthesis on executions (independent oracle)


def _realize(
    alphabet: Alphabet, universe: ProcessUniverse, position: tuple
) -> Execution:
    events = []
    vectors = [vec for group in position for vec in group]
    for p, vec in zip(universe.all_procs, vectors):
        for action, n in zip(alphabet.actions, vec):
            events.extend(Event(action, p) for _ in range(n))
    return Execution(alphabet, universe, tuple(events))


def bruteforce_synthesis(
    phi: Formula,
    alphabet: Alphabet,
    sizes: tuple[int, int, int],
    block_bound: int | None = None,
    node_budget: int | None = DEFAULT_NODE_BUDGET,
) -> Verdict:
    """Decide the synthesis game for `phi` directly on executions.

    Positions are per-process saturated letter-count vectors (counts capped
    at the formula's quantifier rank, below which the sentence cannot
    distinguish counts anyway), grouped per type and sorted, since processes
    of equal type are interchangeable. System extends the execution with
    system letters so the sentence holds; Environment with environment
    letters so it fails; the opening pass mirrors the game semantics.

    This function deliberately bypasses the abstraction, game and normal
    form layers: it decides the same question from first principles and is
    used to cross-check them.
    """
    require_fragment(phi, {"~"}, "bruteforce_synthesis")
    universe = ProcessUniverse.of_sizes(*sizes)
    bound = max(1, quantifier_rank(phi))
    n_actions = len(alphabet.actions)
    sys_idx = tuple(
        i for i, a in enumerate(alphabet.actions) if a in alphabet.sys_actions
    )
    env_idx = tuple(
        i for i, a in enumerate(alphabet.actions) if a in alphabet.env_actions
    )
    zero = (0,) * n_actions
    k_s, k_e, k_se = sizes
    start = ((zero,) * k_s, (zero,) * k_e, (zero,) * k_se)

    truth_cache: dict[tuple, bool] = {}

    def truth(position: tuple) -> bool:
        hit = truth_cache.get(position)
        if hit is None:
            hit = truth_cache[position] = model_check(
                _realize(alphabet, universe, position), phi
            )
        return hit

    def vector_options(vec: tuple, letters: tuple[int, ...]) -> list[tuple]:
        """All saturated extensions of one process's vector, current included."""
        ranges = [
            range(c, bound + 1) if i in letters else range(c, c + 1)
            for i, c in enumerate(vec)
        ]
        return [tuple(v) for v in itertools.product(*ranges)]

    def moves(position: tuple, side: str) -> list[tuple]:
        group_ids = (0, 2) if side == SYSTEM else (1, 2)
        letters = sys_idx if side == SYSTEM else env_idx
        per_group: list[list[tuple]] = []
        for gi in range(3):
            group = position[gi]
            if gi not in group_ids or not group:
                per_group.append([group])
                continue
            choices = [vector_options(vec, letters) for vec in group]
            per_group.append(
                sorted({tuple(sorted(combo)) for combo in itertools.product(*choices)})
            )
        out = set()
        for combo in itertools.product(*per_group):
            if combo != position:
                out.add(combo)
        want = side == SYSTEM
        return sorted(p for p in out if truth(p) == want)

    memo: dict[tuple[tuple, str], bool] = {}

    def remember(key, value: bool) -> bool:
        if node_budget is not None and len(memo) >= node_budget:
            raise SolveBudgetError(
                f"bruteforce_synthesis exceeded the node budget of {node_budget}"
            )
        memo[key] = value
        return value

    def blocks_left(depth: int) -> bool:
        return block_bound is None or depth < block_bound

    def key_of(position: tuple, side: str, depth: int):
        # with a block bound, the value genuinely depends on the depth
        return (position, side, depth if block_bound is not None else -1)

    def win_sys(position: tuple, depth: int) -> bool:
        key = key_of(position, SYSTEM, depth)
        if key in memo:
            return memo[key]
        value = blocks_left(depth) and any(
            win_env(nxt, depth + 1) for nxt in moves(position, SYSTEM)
        )
        return remember(key, value)

    def win_env(position: tuple, depth: int) -> bool:
        key = key_of(position, ENVIRONMENT, depth)
        if key in memo:
            return memo[key]
        value = not blocks_left(depth) or all(
            win_sys(nxt, depth + 1) for nxt in moves(position, ENVIRONMENT)
        )
        return remember(key, value)

    system_wins = truth(start) and win_env(start, 0)
    if not system_wins:
        system_wins = win_sys(start, 0)
    return Verdict(
        WINNER_SYSTEM if system_wins else WINNER_ENVIRONMENT, explored=len(memo)
    )
