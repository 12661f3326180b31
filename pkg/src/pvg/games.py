"""Parameterized vector games.

A game is played on configurations (see `abstraction`): multisets of typed
tokens over the locations L = {0..B}^A. System owns the tokens of type s,
Environment those of type e, and both may move the shared ones of type se.
A move picks, for each chosen token, a word over the mover's own actions and
advances the token's location by the word's saturated letter counts. Moves
are simultaneous: one transition may relocate many tokens at once.

Acceptance is a finite disjunction of *rows*. A row assigns each location a
local condition: three comparisons (one per token type) of the shape '= n'
or '>= n'. Rows are stored sparsely as explicit (location, condition) pairs
plus a default condition for every unlisted location. A configuration is
accepting when some row holds at every location.

Plays alternate, System first. Every System move must land in an accepting
configuration and every Environment move in a rejecting one; a player unable
to move ends the play. System additionally may *pass* at the very first turn
when the initial configuration is already accepting — afterwards a pass is
never useful, because the configuration to leave is never accepting on
System's turn. Identity moves are otherwise excluded: each effective move
strictly increases the total letter count (the potential), so plays are
finite and the game is an acyclic reachability game.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

from .abstraction import (
    TYPE_INDEX,
    Configuration,
    Location,
    Triple,
    all_locations,
)
from .errors import SolveBudgetError
from .logic import Alphabet, Formula
from . import normalform as _nf

SYSTEM = "system"
ENVIRONMENT = "environment"

#: Upper bound on enumerated move assignments per call before refusing.
DEFAULT_BRANCH_BUDGET = 2_000_000


# ---------------------------------------------------------------------------
# Local conditions and acceptance rows


def _parse_cmp(text: str) -> tuple[str, int]:
    text = text.strip().replace("≥", ">=")
    if text.startswith(">="):
        op, rest = ">=", text[2:]
    elif text.startswith("="):
        op, rest = "=", text[1:]
    else:
        raise ValueError(f"bad condition {text!r}: expected '=n' or '>=n'")
    n = int(rest)
    if n < 0:
        raise ValueError(f"bad condition {text!r}: negative bound")
    return op, n


def _render_cmp(pair: tuple[str, int]) -> str:
    op, n = pair
    return ("≥" if op == ">=" else "=") + str(n)


@dataclass(frozen=True)
class LocalCondition:
    """Per-location constraint: one (comparator, bound) pair per token type."""

    s: tuple[str, int]
    e: tuple[str, int]
    se: tuple[str, int]

    def __post_init__(self):
        for pair in (self.s, self.e, self.se):
            op, n = pair
            if op not in ("=", ">="):
                raise ValueError(f"bad comparator {op!r}")
            if n < 0:
                raise ValueError("negative bound in condition")

    @classmethod
    def of(cls, s: str, e: str, se: str) -> "LocalCondition":
        """Build from strings like '=0', '>=2' (unicode '≥' accepted)."""
        return cls(_parse_cmp(s), _parse_cmp(e), _parse_cmp(se))

    def satisfied_by(self, triple: Triple) -> bool:
        for (op, n), have in zip((self.s, self.e, self.se), triple):
            if op == "=":
                if have != n:
                    return False
            elif have < n:
                return False
        return True

    @property
    def max_constant(self) -> int:
        return max(self.s[1], self.e[1], self.se[1])

    def render(self) -> tuple[str, str, str]:
        return (_render_cmp(self.s), _render_cmp(self.e), _render_cmp(self.se))


#: Shorthands for the two conditions nearly every row is built from.
ZERO = LocalCondition.of("=0", "=0", "=0")
ANY = LocalCondition.of(">=0", ">=0", ">=0")


@dataclass(frozen=True)
class Row:
    """One acceptance row: explicit conditions plus a default elsewhere."""

    explicit: tuple[tuple[Location, LocalCondition], ...]
    default: LocalCondition = ZERO

    def __post_init__(self):
        locs = [loc for loc, _ in self.explicit]
        if len(set(locs)) != len(locs):
            raise ValueError("row lists a location twice")
        object.__setattr__(
            self,
            "explicit",
            tuple(sorted(((tuple(l), c) for l, c in self.explicit))),
        )

    @classmethod
    def of(
        cls, conditions: Mapping[Location, LocalCondition], default: LocalCondition = ZERO
    ) -> "Row":
        return cls(tuple(conditions.items()), default)

    def condition_at(self, loc: Location) -> LocalCondition:
        for l, cond in self.explicit:
            if l == loc:
                return cond
        return self.default

    def satisfied(self, config: Configuration) -> bool:
        listed = set()
        for loc, cond in self.explicit:
            listed.add(loc)
            if not cond.satisfied_by(config.get(loc)):
                return False
        occupied_unlisted = 0
        for loc, triple in config.tokens:
            if loc in listed:
                continue
            occupied_unlisted += 1
            if not self.default.satisfied_by(triple):
                return False
        if not self.default.satisfied_by((0, 0, 0)):
            # every unlisted location must then be occupied (and was checked)
            n_locations = (config.bound + 1) ** len(config.alphabet.actions)
            if occupied_unlisted != n_locations - len(listed):
                return False
        return True

    @property
    def max_constant(self) -> int:
        out = self.default.max_constant
        for _, cond in self.explicit:
            out = max(out, cond.max_constant)
        return out


def _sys_letters_below_env(loc: Location, alphabet: Alphabet) -> bool:
    n_sys = len(alphabet.sys_actions)
    return sum(loc[:n_sys]) < sum(loc[n_sys:])


#: Named location predicates usable by PredicateRow (picklable by name).
LOCATION_PREDICATES: dict[str, Callable[[Location, Alphabet], bool]] = {
    "sys_lt_env": _sys_letters_below_env,
}


@dataclass(frozen=True)
class PredicateRow:
    """A family of rows, one per location satisfying a named predicate.

    The member row for location l places `cond` at l and `default`
    everywhere else; the family is satisfied when some member is. This keeps
    families like "some location with more environment than system letters
    holds a token" implicit instead of materializing (B+1)^|A| rows.
    """

    family: str
    cond: LocalCondition
    default: LocalCondition = ANY

    def __post_init__(self):
        if self.family not in LOCATION_PREDICATES:
            raise ValueError(f"unknown location predicate {self.family!r}")

    def _predicate(self) -> Callable[[Location, Alphabet], bool]:
        return LOCATION_PREDICATES[self.family]

    def member(self, loc: Location) -> Row:
        return Row(((loc, self.cond),), self.default)

    def satisfied(self, config: Configuration) -> bool:
        pred = self._predicate()
        alphabet = config.alphabet
        for loc, _ in config.tokens:
            if pred(loc, alphabet) and self.member(loc).satisfied(config):
                return True
        if self.cond.satisfied_by((0, 0, 0)):
            # an unoccupied predicate location can witness as well
            occupied = set(config.occupied())
            for loc in all_locations(alphabet, config.bound):
                if loc in occupied or not pred(loc, alphabet):
                    continue
                if self.member(loc).satisfied(config):
                    return True
        return False

    @property
    def max_constant(self) -> int:
        return max(self.cond.max_constant, self.default.max_constant)


AcceptanceRow = Row | PredicateRow


# ---------------------------------------------------------------------------
# Acceptance


@dataclass(frozen=True)
class ExplicitAcceptance:
    """Disjunction of rows; the empty disjunction rejects everything."""

    rows: tuple[AcceptanceRow, ...]

    def holds(self, config: Configuration) -> bool:
        return any(row.satisfied(config) for row in self.rows)

    @property
    def max_constant(self) -> int:
        return max((row.max_constant for row in self.rows), default=0)


@dataclass(frozen=True)
class FormulaAcceptance:
    """Acceptance by a sentence of the order-free fragment.

    A configuration is accepting when the sentence holds on an execution
    abstracting to it. This is well-defined as long as the game bound is at
    least the formula's threshold, which `formula_to_game` guarantees.
    """

    phi: Formula
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def holds(self, config: Configuration) -> bool:
        key = config.tokens
        hit = self._cache.get(key)
        if hit is None:
            hit = self._cache[key] = _nf.holds_on_config(self.phi, config)
        return hit

    @property
    def max_constant(self) -> int:
        raise ValueError(
            "formula acceptance carries no explicit constants; "
            "normalize the formula or supply the constant yourself"
        )


Acceptance = ExplicitAcceptance | FormulaAcceptance


@dataclass(frozen=True)
class Game:
    """A parameterized vector game: alphabet, bound, acceptance."""

    alphabet: Alphabet
    bound: int
    acceptance: Acceptance

    def __post_init__(self):
        if self.bound < 1:
            raise ValueError("bound must be at least 1")
        if isinstance(self.acceptance, ExplicitAcceptance):
            width = len(self.alphabet.actions)
            for row in self.acceptance.rows:
                if isinstance(row, PredicateRow):
                    continue
                for loc, _ in row.explicit:
                    if len(loc) != width or any(
                        not 0 <= c <= self.bound for c in loc
                    ):
                        raise ValueError(f"row location {loc} outside the game")

    def initial(self, k_s: int, k_e: int, k_se: int) -> Configuration:
        return Configuration.initial(self.alphabet, self.bound, k_s, k_e, k_se)

    def side_letters(self, side: str) -> tuple[int, ...]:
        """Indices of the actions the given side appends."""
        n_sys = len(self.alphabet.sys_actions)
        if side == SYSTEM:
            return tuple(range(n_sys))
        if side == ENVIRONMENT:
            return tuple(range(n_sys, len(self.alphabet.actions)))
        raise ValueError(f"unknown side {side!r}")

    @staticmethod
    def movable_types(side: str) -> tuple[str, ...]:
        if side == SYSTEM:
            return ("s", "se")
        if side == ENVIRONMENT:
            return ("e", "se")
        raise ValueError(f"unknown side {side!r}")


def accepts(game: Game, config: Configuration) -> bool:
    """Does the configuration satisfy the game's acceptance condition?"""
    if config.alphabet != game.alphabet:
        raise ValueError("configuration alphabet does not match the game")
    if config.bound != game.bound:
        raise ValueError(
            f"configuration bound {config.bound} does not match game bound {game.bound}"
        )
    return game.acceptance.holds(config)


# ---------------------------------------------------------------------------
# Transitions


@dataclass(frozen=True)
class Transition:
    """A simultaneous token movement owned by one side.

    `moves` maps (source, target) location pairs to the number of tokens of
    each type moved along that pair. Canonical form: zero triples and
    diagonal pairs are dropped (a token 'moved' to its own location has no
    observable effect), entries are sorted.
    """

    side: str
    moves: tuple[tuple[tuple[Location, Location], Triple], ...]

    def __post_init__(self):
        if self.side not in (SYSTEM, ENVIRONMENT):
            raise ValueError(f"unknown side {self.side!r}")
        cleaned = []
        seen = set()
        for (src, dst), triple in self.moves:
            src, dst = tuple(src), tuple(dst)
            triple = tuple(triple)
            if len(triple) != 3 or any(n < 0 for n in triple):
                raise ValueError(f"bad move counts {triple}")
            if self.side == SYSTEM and triple[TYPE_INDEX["e"]]:
                raise ValueError("a system transition cannot move e-tokens")
            if self.side == ENVIRONMENT and triple[TYPE_INDEX["s"]]:
                raise ValueError("an environment transition cannot move s-tokens")
            if ((src, dst)) in seen:
                raise ValueError(f"duplicate move entry {(src, dst)}")
            seen.add((src, dst))
            if src == dst or triple == (0, 0, 0):
                continue
            cleaned.append(((src, dst), triple))
        object.__setattr__(self, "moves", tuple(sorted(cleaned)))

    @classmethod
    def of(
        cls, side: str, moves: Mapping[tuple[Location, Location], Triple]
    ) -> "Transition":
        return cls(side, tuple(moves.items()))

    @classmethod
    def empty(cls, side: str = SYSTEM) -> "Transition":
        """The pass: moves nothing."""
        return cls(side, ())

    @property
    def is_pass(self) -> bool:
        return not self.moves

    def out_map(self) -> dict[Location, list[int]]:
        out: dict[Location, list[int]] = {}
        for (src, _), triple in self.moves:
            acc = out.setdefault(src, [0, 0, 0])
            for i in range(3):
                acc[i] += triple[i]
        return out

    def in_map(self) -> dict[Location, list[int]]:
        acc: dict[Location, list[int]] = {}
        for (_, dst), triple in self.moves:
            slot = acc.setdefault(dst, [0, 0, 0])
            for i in range(3):
                slot[i] += triple[i]
        return acc

    def check_shape(self, alphabet: Alphabet, bound: int) -> None:
        """Validate locations and the letter discipline against a game."""
        width = len(alphabet.actions)
        n_sys = len(alphabet.sys_actions)
        own = range(n_sys) if self.side == SYSTEM else range(n_sys, width)
        own = set(own)
        for (src, dst), _ in self.moves:
            for loc in (src, dst):
                if len(loc) != width or any(not 0 <= c <= bound for c in loc):
                    raise ValueError(f"location {loc} outside the game")
            for i in range(width):
                if i in own:
                    if dst[i] < src[i]:
                        raise ValueError(
                            f"move {src}->{dst} removes letters at index {i}"
                        )
                elif dst[i] != src[i]:
                    raise ValueError(
                        f"move {src}->{dst} touches the other side's letters"
                    )


def applicable(tau: Transition, config: Configuration) -> bool:
    """Can the transition fire: enough tokens of each type at each source?"""
    tau.check_shape(config.alphabet, config.bound)
    for loc, need in tau.out_map().items():
        have = config.get(loc)
        if any(need[i] > have[i] for i in range(3)):
            return False
    return True


def apply(tau: Transition, config: Configuration) -> Configuration:
    """The configuration after firing the transition."""
    if not applicable(tau, config):
        raise ValueError("transition is not applicable here")
    counts = {loc: list(triple) for loc, triple in config.tokens}
    for loc, need in tau.out_map().items():
        have = counts[loc]
        for i in range(3):
            have[i] -= need[i]
    for loc, add in tau.in_map().items():
        have = counts.setdefault(loc, [0, 0, 0])
        for i in range(3):
            have[i] += add[i]
    return Configuration.of(
        config.alphabet, config.bound, {l: tuple(t) for l, t in counts.items()}
    )


# ---------------------------------------------------------------------------
# Move generation


@dataclass(frozen=True)
class MoveCaps:
    """Search-space limits for move enumeration.

    None means unlimited. Capping can exclude winning moves, so any verdict
    computed under finite caps is reported as capped semantics.
    """

    max_tokens_per_move: int | None = None
    max_letters_per_token: int | None = None

    @property
    def is_unlimited(self) -> bool:
        return self.max_tokens_per_move is None and self.max_letters_per_token is None


UNLIMITED = MoveCaps()


@functools.lru_cache(maxsize=None)
def _token_targets(
    loc: Location,
    own_letters: tuple[int, ...],
    bound: int,
    max_letters: int | None,
) -> tuple[Location, ...]:
    """Locations strictly above `loc` reachable by appending own letters."""
    ranges = []
    for i, c in enumerate(loc):
        if i in own_letters:
            ranges.append(range(c, bound + 1))
        else:
            ranges.append(range(c, c + 1))
    out = []
    for dst in itertools.product(*ranges):
        delta = sum(dst[i] - loc[i] for i in range(len(loc)))
        if delta == 0:
            continue
        if max_letters is not None and delta > max_letters:
            continue
        out.append(dst)
    out.sort()
    return tuple(out)


def _group_assignments(
    n_tokens: int, targets: Sequence[Location], max_move: int
) -> Iterator[tuple[tuple[Location, int], ...]]:
    """All ways to send 0..max_move of n interchangeable tokens to targets."""
    limit = min(n_tokens, max_move)

    def rec(i: int, left: int) -> Iterator[tuple[tuple[Location, int], ...]]:
        if i == len(targets):
            yield ()
            return
        for m in range(left + 1):
            for rest in rec(i + 1, left - m):
                yield ((targets[i], m),) + rest if m else rest

    yield from rec(0, limit)


def iter_legal_moves(
    game: Game,
    config: Configuration,
    side: str,
    caps: MoveCaps = UNLIMITED,
    branch_budget: int | None = DEFAULT_BRANCH_BUDGET,
) -> Iterator[tuple[Transition, Configuration]]:
    """Stream the effective moves of a side, filtered by the acceptance flip.

    System moves must land on accepting configurations, Environment moves on
    rejecting ones. The pass is never included: it is only meaningful at the
    head of a play and is handled by the caller. Enumeration order is
    deterministic (tokens in canonical order, targets sorted, depth-first
    assignment); if the raw assignment count would exceed `branch_budget` the
    call refuses upfront with SolveBudgetError instead of silently truncating.
    """
    own = game.side_letters(side)
    types = game.movable_types(side)
    specs = []
    estimate = 1
    for loc, triple in config.tokens:
        targets = _token_targets(loc, own, game.bound, caps.max_letters_per_token)
        if not targets:
            continue
        for ptype in types:
            n = triple[TYPE_INDEX[ptype]]
            if not n:
                continue
            cap = n if caps.max_tokens_per_move is None else min(
                n, caps.max_tokens_per_move
            )
            specs.append((loc, TYPE_INDEX[ptype], targets, cap))
            estimate *= math.comb(cap + len(targets), len(targets))
            if branch_budget is not None and estimate > branch_budget:
                raise SolveBudgetError(
                    f"move enumeration would exceed {branch_budget} assignments; "
                    "restrict MoveCaps or raise the budget"
                )

    # Pre-materialized per-group options; each option is (moved, assignment).
    groups = [
        (loc, idx, [(sum(m for _, m in a), a) for a in _group_assignments(cap, targets, cap)])
        for loc, idx, targets, cap in specs
    ]

    def combos() -> Iterator[tuple]:
        if caps.max_tokens_per_move is None:
            yield from itertools.product(*(opts for _, _, opts in groups))
            return

        def rec(i: int, left: int):
            if i == len(groups):
                yield ()
                return
            for moved, assignment in groups[i][2]:
                if moved > left:
                    continue
                for rest in rec(i + 1, left - moved):
                    yield ((moved, assignment),) + rest

        yield from rec(0, caps.max_tokens_per_move)

    base = dict(config.tokens)
    zero3 = (0, 0, 0)
    want = side == SYSTEM
    acceptance = game.acceptance
    alphabet, bound = game.alphabet, game.bound
    for combo in combos():
        counts = dict(base)
        pair_moves: dict[tuple[Location, Location], list[int]] = {}
        effective = False
        for (loc, idx, _), (moved, assignment) in zip(groups, combo):
            if not moved:
                continue
            effective = True
            for dst, m in assignment:
                trip = list(counts.get(dst, zero3))
                trip[idx] += m
                counts[dst] = tuple(trip)
                slot = pair_moves.setdefault((loc, dst), [0, 0, 0])
                slot[idx] += m
            trip = list(counts[loc])
            trip[idx] -= moved
            counts[loc] = tuple(trip)
        if not effective:
            continue
        tokens = tuple(sorted(
            (loc, trip) for loc, trip in counts.items() if trip != zero3
        ))
        nxt = Configuration._of_canonical(alphabet, bound, tokens)
        if acceptance.holds(nxt) == want:
            tau = Transition.of(side, {k: tuple(v) for k, v in pair_moves.items()})
            yield tau, nxt


def legal_moves(
    game: Game,
    config: Configuration,
    side: str,
    caps: MoveCaps = UNLIMITED,
    branch_budget: int | None = DEFAULT_BRANCH_BUDGET,
) -> list[tuple[Transition, Configuration]]:
    """All effective moves of a side, in canonical order (see iter_legal_moves)."""
    out = list(iter_legal_moves(game, config, side, caps, branch_budget))
    out.sort(key=lambda pair: pair[0].moves)
    return out


# ---------------------------------------------------------------------------
# Plays


@dataclass(frozen=True)
class Play:
    """An alternating sequence of moves from an initial configuration."""

    initial: Configuration
    steps: tuple[tuple[Transition, Configuration], ...] = ()

    @property
    def final(self) -> Configuration:
        return self.steps[-1][1] if self.steps else self.initial

    def __len__(self) -> int:
        return len(self.steps)

    def extended(self, tau: Transition, config: Configuration) -> "Play":
        return Play(self.initial, self.steps + ((tau, config),))


@dataclass(frozen=True)
class PlayCheck:
    """Outcome of validate_play: truthy iff the play is well-formed."""

    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_play(game: Game, play: Play) -> PlayCheck:
    """Check alternation, applicability, and the accept/reject flip."""

    def fail(reason: str) -> PlayCheck:
        return PlayCheck(False, reason)

    current = play.initial
    if current.alphabet != game.alphabet or current.bound != game.bound:
        return fail("initial configuration does not match the game")
    for i, (tau, claimed) in enumerate(play.steps, start=1):
        side = SYSTEM if i % 2 == 1 else ENVIRONMENT
        if tau.side != side:
            return fail(f"step {i}: expected a {side} move, got {tau.side}")
        try:
            if not applicable(tau, current):
                return fail(f"step {i}: transition is not applicable")
            nxt = apply(tau, current)
        except ValueError as exc:
            return fail(f"step {i}: {exc}")
        if nxt != claimed:
            return fail(f"step {i}: recorded configuration is not the result")
        if side == SYSTEM and not accepts(game, nxt):
            return fail(f"step {i}: system move lands on a rejecting configuration")
        if side == ENVIRONMENT and accepts(game, nxt):
            return fail(f"step {i}: environment move lands on an accepting configuration")
        if side == SYSTEM and tau.is_pass and i != 1:
            return fail(f"step {i}: pass is only allowed as the opening move")
        current = nxt
    return PlayCheck(True)
