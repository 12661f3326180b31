"""Reductions between sentences, games, executions, and counter machines.

Four translation families live here:

* formula → game and game → formula: a sentence of the order-free fragment
  and a vector game can each be compiled into the other with the same
  winning parameter sets.
* execution ↔ play: a normalized execution (blocks alternating between the
  sides, flipping the acceptance verdict) induces a play of the abstraction
  game, and conversely a play can be concretized back into an execution by
  handing out process identities deterministically.
* two-counter machines → games: a Minsky machine halts if and only if
  System wins the encoded game for some number of shared processes; the
  accompanying simulation strategy wins whenever enough tokens are
  available.
* the library of small example games with hand-rolled winning strategies.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

from .abstraction import (
    TYPE_INDEX,
    TYPE_ORDER,
    Configuration,
    Location,
    all_locations,
    loc_zero,
)
from .errors import InvalidPlayError, NormalizeBudgetError
from .games import (
    ANY,
    ENVIRONMENT,
    SYSTEM,
    ZERO,
    AcceptanceRow,
    ExplicitAcceptance,
    FormulaAcceptance,
    Game,
    LocalCondition,
    LOCATION_PREDICATES,
    Play,
    PredicateRow,
    Row,
    Transition,
    accepts,
    apply,
    validate_play,
)
from .logic import (
    ActionAtom,
    Alphabet,
    And,
    CountAtLeast,
    CountExactly,
    Event,
    Execution,
    Formula,
    ProcessUniverse,
    Sim,
    TypeAtom,
    conj,
    disj,
    require_fragment,
)
from .normalform import normalize, threshold

__all__ = [
    "formula_to_game",
    "game_to_formula",
    "execution_to_play",
    "play_to_execution",
    "TcmTransition",
    "TwoCounterMachine",
    "TcmConfiguration",
    "tcm_successors",
    "tcm_run_bounded",
    "encode_2cm",
    "tcm_strategy",
    "lemma4_game",
    "lemma4_strategy",
    "lemma5_game",
    "lemma5_strategy",
    "example5_game",
    "example5_strategy",
    "library_games",
    "DEFAULT_INVERT_BUDGET",
]


# ---------------------------------------------------------------------------
# Formula -> game


def _clause_to_row(clause) -> Row:
    """One normal-form clause as an acceptance row (default: unconstrained)."""
    by_loc: dict[Location, list[tuple[str, int] | None]] = {}
    for c in clause:
        slots = by_loc.setdefault(c.loc, [None, None, None])
        idx = TYPE_INDEX[c.ptype]
        if slots[idx] is not None:
            raise ValueError("clause constrains the same profile twice")
        slots[idx] = (">=" if c.cmp == ">=" else "=", c.m)
    explicit = {}
    for loc, slots in by_loc.items():
        parts = tuple(pair if pair is not None else (">=", 0) for pair in slots)
        explicit[loc] = LocalCondition(*parts)
    return Row.of(explicit, default=ANY)


def formula_to_game(
    phi: Formula,
    alphabet: Alphabet,
    *,
    bound: int | None = None,
    explicit: bool = False,
    m_cap: int | None = None,
    budget: int | None = None,
) -> Game:
    """Compile a sentence of the order-free fragment into a vector game.

    The game's bound defaults to the sentence's threshold, and acceptance is
    the sentence itself, evaluated on canonical executions of configurations.
    With `explicit=True` the sentence is first normalized and the game gets
    explicit acceptance rows (one per clause), which is what cutoff analysis
    needs. System wins the game from an all-zero initial configuration with
    (k_s, k_e, k_se) tokens exactly when the synthesis problem for phi with
    those process counts is realizable.
    """
    require_fragment(phi, {"~"}, "formula_to_game")
    B = threshold(phi) if bound is None else bound
    if B < 1:
        raise ValueError("bound must be at least 1")
    if explicit:
        kwargs = {"bound": B, "m_cap": m_cap}
        if budget is not None:
            kwargs["budget"] = budget
        nf = normalize(phi, alphabet, **kwargs)
        rows = tuple(_clause_to_row(clause) for clause in nf.clauses)
        return Game(alphabet, B, ExplicitAcceptance(rows))
    return Game(alphabet, B, FormulaAcceptance(phi))


# ---------------------------------------------------------------------------
# Game -> formula


DEFAULT_INVERT_BUDGET = 50_000

_VAR_OUTER = "y"
_VAR_INNER = "z"


def _class_profile_formula(loc: Location, alphabet: Alphabet, bound: int) -> Formula:
    """The formula stating that _VAR_OUTER's class matches location `loc`.

    Per action, the class must contain exactly loc(a) occurrences when
    loc(a) < bound and at least `bound` occurrences when saturated.
    """
    parts = []
    for i, action in enumerate(alphabet.actions):
        body = And(Sim(_VAR_INNER, _VAR_OUTER), ActionAtom(action, _VAR_INNER))
        if loc[i] < bound:
            parts.append(CountExactly(loc[i], _VAR_INNER, body))
        else:
            parts.append(CountAtLeast(bound, _VAR_INNER, body))
    return conj(parts)


def game_to_formula(game: Game, *, budget: int | None = DEFAULT_INVERT_BUDGET) -> Formula:
    """Invert a game with explicit acceptance into an equivalent sentence.

    Each row becomes one disjunct: a conjunction, over all locations and
    process types, of counting statements "the number of processes of this
    type whose letter profile matches the location compares as required".
    Trivial '>= 0' requirements are dropped. Games with formula acceptance
    cannot be inverted syntactically and are rejected.
    """
    acc = game.acceptance
    if isinstance(acc, FormulaAcceptance):
        raise ValueError(
            "game has formula acceptance; only explicit rows can be inverted"
        )
    alphabet, B = game.alphabet, game.bound
    locs = list(all_locations(alphabet, B))

    rows: list[Row] = []
    for row in acc.rows:
        if isinstance(row, PredicateRow):
            pred = LOCATION_PREDICATES[row.family]
            rows.extend(row.member(loc) for loc in locs if pred(loc, alphabet))
        else:
            rows.append(row)
    if budget is not None and len(rows) * len(locs) * 3 > budget:
        raise NormalizeBudgetError(
            f"inverting this game needs {len(rows) * len(locs) * 3} counting "
            f"conjuncts, more than the budget of {budget}"
        )

    disjuncts = []
    for row in rows:
        conjuncts = []
        for loc in locs:
            cond = row.condition_at(loc)
            profile = None
            for ptype, (op, n) in zip(TYPE_ORDER, (cond.s, cond.e, cond.se)):
                if op == ">=" and n == 0:
                    continue
                if profile is None:
                    profile = _class_profile_formula(loc, alphabet, B)
                body = And(TypeAtom(ptype, _VAR_OUTER), profile)
                node = CountAtLeast if op == ">=" else CountExactly
                conjuncts.append(node(n, _VAR_OUTER, body))
        disjuncts.append(conj(conjuncts))
    return disj(disjuncts)


# ---------------------------------------------------------------------------
# Execution -> play


def _capped(counts: Sequence[int], bound: int) -> Location:
    return tuple(min(bound, c) for c in counts)


def execution_to_play(w: Execution, game: Game) -> Play:
    """The play induced by a normalized execution.

    The execution must decompose into blocks of events alternating between
    the sides, System first (a leading environment block is preceded by an
    implicit empty System block, the opening pass), such that the abstract
    configuration after each block satisfies the game's acceptance exactly
    after the odd-numbered blocks. Each block becomes one transition moving
    every acting process's class profile from its old to its new location.
    """
    if w.alphabet != game.alphabet:
        raise ValueError("execution alphabet does not match the game")
    B = game.bound

    blocks: list[tuple[str, list[Event]]] = []
    for ev in w.events:
        side = SYSTEM if w.alphabet.side(ev.action) == "sys" else ENVIRONMENT
        if blocks and blocks[-1][0] == side:
            blocks[-1][1].append(ev)
        else:
            blocks.append((side, [ev]))
    if blocks and blocks[0][0] == ENVIRONMENT:
        blocks.insert(0, (SYSTEM, []))

    k_s, k_e, k_se = w.universe.sizes()
    config = Configuration.initial(w.alphabet, B, k_s, k_e, k_se)
    counts: dict[int, list[int]] = {
        p: [0] * len(w.alphabet.actions) for p in w.universe.all_procs
    }
    play = Play(config)
    for beta, (side, events) in enumerate(blocks, start=1):
        expected = SYSTEM if beta % 2 == 1 else ENVIRONMENT
        if side != expected:
            raise InvalidPlayError(
                f"block {beta} belongs to {side}, expected {expected}"
            )
        if not events:
            tau = Transition.empty(SYSTEM)
        else:
            before = {}
            for ev in events:
                if ev.process not in before:
                    before[ev.process] = _capped(counts[ev.process], B)
                counts[ev.process][w.alphabet.index(ev.action)] += 1
            moves: dict[tuple[Location, Location], list[int]] = {}
            for p, src in before.items():
                dst = _capped(counts[p], B)
                if dst == src:
                    continue
                slot = moves.setdefault((src, dst), [0, 0, 0])
                slot[TYPE_INDEX[w.universe.type_of(p)]] += 1
            tau = Transition.of(side, {k: tuple(v) for k, v in moves.items()})
            config = apply(tau, config)
        if accepts(game, config) != (beta % 2 == 1):
            raise InvalidPlayError(
                f"execution is not normalized for this game: after block {beta} "
                f"the configuration is {'accepting' if beta % 2 == 0 else 'rejecting'}"
            )
        play = play.extended(tau, config)
    return play


# ---------------------------------------------------------------------------
# Play -> execution


def play_to_execution(play: Play, game: Game) -> Execution:
    """Concretize a valid play into a normalized execution.

    Process identities are handed out deterministically: each location keeps
    a memory of which processes currently sit there, transitions claim the
    lowest identities first, and transition entries are processed in the
    canonical (source, target) order. Every moved process emits the minimal
    word realizing its location change, letters in declaration order.
    """
    check = validate_play(game, play)
    if not check:
        raise InvalidPlayError(f"play does not validate: {check.reason}")
    alphabet = game.alphabet
    k_s, k_e, k_se = play.initial.totals()
    universe = ProcessUniverse.of_sizes(k_s, k_e, k_se)
    pools = {
        "s": list(universe.sys_procs),
        "e": list(universe.env_procs),
        "se": list(universe.both_procs),
    }
    mem: dict[tuple[Location, str], set[int]] = {}
    taken = {ptype: 0 for ptype in TYPE_ORDER}
    for loc, triple in play.initial.tokens:
        for ptype, n in zip(TYPE_ORDER, triple):
            if not n:
                continue
            pool = pools[ptype]
            mem[(loc, ptype)] = set(pool[taken[ptype]: taken[ptype] + n])
            taken[ptype] += n

    events: list[Event] = []
    for tau, _ in play.steps:
        if tau.is_pass:
            continue
        claimed: dict[tuple[Location, str], set[int]] = {}
        incoming: dict[tuple[Location, str], set[int]] = {}
        for (src, dst), triple in tau.moves:
            word = []
            for i, action in enumerate(alphabet.actions):
                word.extend([action] * (dst[i] - src[i]))
            for ptype, n in zip(TYPE_ORDER, triple):
                if not n:
                    continue
                used = claimed.setdefault((src, ptype), set())
                avail = sorted(mem.get((src, ptype), ()) - used)
                chosen = avail[:n]
                used.update(chosen)
                incoming.setdefault((dst, ptype), set()).update(chosen)
                for p in chosen:
                    events.extend(Event(a, p) for a in word)
        for key, gone in claimed.items():
            mem[key] = mem.get(key, set()) - gone
        for key, fresh in incoming.items():
            mem[key] = mem.get(key, set()) | fresh
    return Execution(alphabet, universe, tuple(events))


# ---------------------------------------------------------------------------
# Two-counter machines


_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_RESERVED_NAMES = ("a1", "a2", "b")


@dataclass(frozen=True)
class TcmTransition:
    """One machine transition: source --op--> target.

    `kind` is "inc", "dec" or "zero"; `counter` selects c1 or c2. The name
    doubles as the transition's action letter in the game encoding.
    """

    name: str
    source: str
    kind: str
    counter: int
    target: str

    def __post_init__(self):
        if self.kind not in ("inc", "dec", "zero"):
            raise ValueError(f"bad operation kind {self.kind!r}")
        if self.counter not in (1, 2):
            raise ValueError(f"bad counter {self.counter!r}")
        for field_ in (self.name, self.source, self.target):
            if not _NAME_RE.match(field_):
                raise ValueError(f"bad identifier {field_!r}")

    @property
    def op(self) -> str:
        """The operation in source syntax, e.g. 'c1++' or 'c2==0'."""
        suffix = {"inc": "++", "dec": "--", "zero": "==0"}[self.kind]
        return f"c{self.counter}{suffix}"


@dataclass(frozen=True)
class TwoCounterMachine:
    """A Minsky machine: two counters, increment/decrement/zero-test."""

    states: tuple[str, ...]
    init: str
    halt: str
    transitions: tuple[TcmTransition, ...]

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate states")
        for q in self.states:
            if not _NAME_RE.match(q):
                raise ValueError(f"bad state name {q!r}")
        if self.init not in self.states or self.halt not in self.states:
            raise ValueError("initial and halting states must be listed states")
        names = [t.name for t in self.transitions]
        if len(set(names)) != len(names):
            raise ValueError("duplicate transition names")
        clashes = (set(names) | set(self.states)) & set(_RESERVED_NAMES)
        if clashes:
            raise ValueError(f"names {sorted(clashes)} are reserved")
        if set(names) & set(self.states):
            raise ValueError("transition names must differ from state names")
        for t in self.transitions:
            if t.source not in self.states or t.target not in self.states:
                raise ValueError(f"transition {t.name} uses unknown states")


@dataclass(frozen=True)
class TcmConfiguration:
    """Machine configuration: control state plus the two counter values."""

    state: str
    c1: int
    c2: int

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("counters are nonnegative")

    def counter(self, i: int) -> int:
        return self.c1 if i == 1 else self.c2


def tcm_successors(
    machine: TwoCounterMachine, gamma: TcmConfiguration
) -> list[tuple[TcmTransition, TcmConfiguration]]:
    """Enabled transitions and their successor configurations, in order."""
    out = []
    for t in machine.transitions:
        if t.source != gamma.state:
            continue
        v = gamma.counter(t.counter)
        if t.kind == "inc":
            v2 = v + 1
        elif t.kind == "dec":
            if v == 0:
                continue
            v2 = v - 1
        else:
            if v != 0:
                continue
            v2 = 0
        c1, c2 = gamma.c1, gamma.c2
        if t.counter == 1:
            c1 = v2
        else:
            c2 = v2
        out.append((t, TcmConfiguration(t.target, c1, c2)))
    return out


Run = list[tuple[TcmTransition, TcmConfiguration]]


def tcm_run_bounded(machine: TwoCounterMachine, step_bound: int) -> Run | None:
    """Breadth-first search for a halting run of at most `step_bound` steps.

    Returns the step list of a shortest halting run from (init, 0, 0), or
    None when no halting configuration is reachable within the bound. The
    initial configuration is implicit; an already-halting machine yields [].
    """
    start = TcmConfiguration(machine.init, 0, 0)
    if start.state == machine.halt:
        return []
    seen = {start}
    frontier: list[tuple[TcmConfiguration, Run]] = [(start, [])]
    for _ in range(step_bound):
        nxt: list[tuple[TcmConfiguration, Run]] = []
        for gamma, run in frontier:
            for t, gamma2 in tcm_successors(machine, gamma):
                if gamma2 in seen:
                    continue
                seen.add(gamma2)
                run2 = run + [(t, gamma2)]
                if gamma2.state == machine.halt:
                    return run2
                nxt.append((gamma2, run2))
        frontier = nxt
        if not frontier:
            return None
    return None


# ---------------------------------------------------------------------------
# The 2CM encoding


_TCM_BOUND = 4


class _TcmSpace:
    """Location bookkeeping shared by the encoder and the strategy."""

    def __init__(self, machine: TwoCounterMachine):
        self.machine = machine
        sys_actions = (
            machine.states
            + tuple(t.name for t in machine.transitions)
            + ("a1", "a2")
        )
        self.alphabet = Alphabet(sys_actions, ("b",))
        self.width = len(self.alphabet.actions)
        self._index = {a: i for i, a in enumerate(self.alphabet.actions)}
        self.l0 = loc_zero(self.alphabet)

    def loc(self, counts: Mapping[str, int]) -> Location:
        out = [0] * self.width
        for action, n in counts.items():
            out[self._index[action]] = n
        return tuple(out)

    def counter_loc(self, i: int) -> Location:
        """The location whose token count encodes counter i."""
        return self.loc({f"a{i}": 2, "b": 2})

    def spent_loc(self, i: int) -> Location:
        """Fully acknowledged decrement residue for counter i."""
        return self.loc({f"a{i}": 4, "b": 4})

    def checkmark(self) -> list[Location]:
        """Locations where leftover tokens are always harmless."""
        out = [self.l0]
        for i in (1, 2):
            out.append(self.counter_loc(i))
            out.append(self.spent_loc(i))
        for q in self.machine.states:
            out.append(self.loc({q: 2, "b": 2}))
        for t in self.machine.transitions:
            out.append(self.loc({t.name: 2, "b": 2}))
        return out


def _se(spec: str) -> LocalCondition:
    return LocalCondition.of("=0", "=0", spec)


def _tcm_row(
    pins: Mapping[Location, str], checkmark: Iterable[Location]
) -> Row:
    explicit = {loc: _se(spec) for loc, spec in pins.items()}
    for loc in checkmark:
        if loc not in explicit:
            explicit[loc] = _se(">=0")
    return Row.of(explicit, default=ZERO)


def encode_2cm(machine: TwoCounterMachine) -> Game:
    """The vector game simulating a two-counter machine.

    System letters are the states, the transition names and the two counter
    letters a1, a2; Environment owns the single acknowledgement letter b;
    the bound is 4. The machine halts from (init, 0, 0) if and only if
    System wins the game from some all-shared initial configuration. Rows
    fall into seven families: first-step rows from mid-run and initial
    configurations, second-step completion rows, punishment rows for wrong
    acknowledgements after either step, the family covering any location
    with more b's than system letters, and the halting rows.
    """
    sp = _TcmSpace(machine)
    check = sp.checkmark()
    rows: list[AcceptanceRow] = []

    def row(pins: Mapping[Location, str], checked: bool = True) -> None:
        rows.append(_tcm_row(pins, check if checked else ()))

    for t in machine.transitions:
        q, qp, i = t.source, t.target, t.counter
        lq = sp.loc({q: 1})
        lt = sp.loc({t.name: 1})
        lqb = sp.loc({q: 1, "b": 1})
        ltb = sp.loc({t.name: 1, "b": 1})
        lq2b = sp.loc({q: 2, "b": 1})
        lt2b = sp.loc({t.name: 2, "b": 1})
        lqp = sp.loc({qp: 1})
        lqpb = sp.loc({qp: 1, "b": 1})
        la = sp.loc({f"a{i}": 1})
        lab = sp.loc({f"a{i}": 1, "b": 1})
        la2b = sp.loc({f"a{i}": 2, "b": 1})
        la3b2 = sp.loc({f"a{i}": 3, "b": 2})
        la3b3 = sp.loc({f"a{i}": 3, "b": 3})
        la4b3 = sp.loc({f"a{i}": 4, "b": 3})
        counter = sp.counter_loc(i)

        # (a) first step from a mid-run encoding, one row per completed state
        for qh in machine.states:
            anchor = sp.loc({qh: 2, "b": 2})
            if t.kind == "inc":
                row({lq: "=1", lt: "=1", la: "=1", anchor: ">=1"})
            elif t.kind == "dec":
                row({lq: "=1", lt: "=1", la3b2: "=1", anchor: ">=1"})
            else:
                row({lq: "=1", lt: "=1", counter: "=0", anchor: ">=1"})

        # (b) first step straight from the initial configuration
        if t.source == machine.init:
            if t.kind == "inc":
                row({lq: "=1", lt: "=1", la: "=1", sp.l0: ">=0"}, checked=False)
            elif t.kind == "zero":
                row({lq: "=1", lt: "=1", sp.l0: ">=0"}, checked=False)

        # (c) second step: doubled, singly acknowledged pebbles plus the
        # fresh target-state token
        if t.kind == "inc":
            row({lq2b: "=1", lt2b: "=1", la2b: "=1", lqp: "=1"})
        elif t.kind == "dec":
            row({lq2b: "=1", lt2b: "=1", la4b3: "=1", lqp: "=1"})
        else:
            row({lq2b: "=1", lt2b: "=1", lqp: "=1"})

        # (e) punish partial acknowledgement of the first step
        if t.kind == "inc":
            for combo in (
                {lqb: "=1", lt: "=1", la: "=1"},
                {lq: "=1", ltb: "=1", la: "=1"},
                {lq: "=1", lt: "=1", lab: "=1"},
                {lqb: "=1", ltb: "=1", la: "=1"},
                {lqb: "=1", lt: "=1", lab: "=1"},
                {lq: "=1", ltb: "=1", lab: "=1"},
            ):
                row(combo)
        elif t.kind == "dec":
            for combo in (
                {lqb: "=1", lt: "=1", la3b2: "=1"},
                {lq: "=1", ltb: "=1", la3b2: "=1"},
                {lq: "=1", lt: "=1", la3b3: "=1"},
                {lqb: "=1", ltb: "=1", la3b2: "=1"},
                {lqb: "=1", lt: "=1", la3b3: "=1"},
                {lq: "=1", ltb: "=1", la3b3: "=1"},
            ):
                row(combo)
        else:
            row({lqb: "=1", lt: "=1"})
            row({lq: "=1", ltb: "=1"})

        # (f) punish partial acknowledgement of the second step
        if t.kind == "inc":
            row({lqp: "=1", lq2b: "=1", lt2b: ">=0", la2b: ">=0"})
            row({lqp: "=1", lq2b: ">=0", lt2b: "=1", la2b: ">=0"})
            row({lqp: "=1", lq2b: ">=0", lt2b: ">=0", la2b: "=1"})
            row({lqpb: "=1", lq2b: ">=0", lt2b: ">=0", la2b: ">=0"})
        elif t.kind == "dec":
            row({lqp: "=1", lq2b: "=1", lt2b: ">=0", la4b3: ">=0"})
            row({lqp: "=1", lq2b: ">=0", lt2b: "=1", la4b3: ">=0"})
            row({lqp: "=1", lq2b: ">=0", lt2b: ">=0", la4b3: "=1"})
            row({lqpb: "=1", lq2b: ">=0", lt2b: ">=0", la4b3: ">=0"})
        else:
            row({lqp: "=1", lq2b: "=1", lt2b: ">=0"})
            row({lqp: "=1", lq2b: ">=0", lt2b: "=1"})
            row({lqpb: "=1", lq2b: ">=0", lt2b: ">=0", la4b3: ">=0"})

    # any location holding more b's than system letters
    rows.append(PredicateRow("sys_lt_env", _se(">=1"), _se(">=0")))

    # halting rows
    qh = machine.halt
    for pin in (
        sp.loc({qh: 2}),
        sp.loc({qh: 2, "b": 1}),
        sp.loc({qh: 2, "b": 2}),
    ):
        row({pin: "=1"})

    return Game(sp.alphabet, _TCM_BOUND, ExplicitAcceptance(tuple(rows)))


# ---------------------------------------------------------------------------
# The simulation strategy


def tcm_strategy(
    machine: TwoCounterMachine, run: Run
) -> Callable[[Configuration], Transition | None]:
    """The positional System strategy simulating a fixed halting run.

    The run's configurations must be pairwise distinct, so that a game
    configuration determines the run position unambiguously. The strategy
    recognizes four shapes — the untouched initial configuration, a faithful
    encoding of a run configuration, and the intermediate shape after the
    Environment acknowledged a first step — and answers the prescribed move;
    on any other configuration it is undefined. With all tokens shared it
    wins from k tokens whenever k >= 3n+1 for a run of n steps.
    """
    sp = _TcmSpace(machine)
    gammas = [TcmConfiguration(machine.init, 0, 0)]
    for t, gamma in run:
        legal = dict(tcm_successors(machine, gammas[-1]))
        if legal.get(t) != gamma:
            raise ValueError(f"run step {t.name} is not enabled or mislabeled")
        gammas.append(gamma)
    if len(set(gammas)) != len(gammas):
        raise ValueError(
            "run visits a configuration twice; the positional strategy "
            "would be ambiguous"
        )
    if gammas[-1].state != machine.halt:
        raise ValueError("run does not reach the halting state")

    bare = {q: sp.loc({q: 1}) for q in machine.states}
    tnames = {t.name: t for t in machine.transitions}
    junk_ok = set(sp.checkmark()) - {sp.l0}

    def se_count(config: Configuration, loc: Location) -> int:
        return config.count(loc, "se")

    def match_encoding(config: Configuration) -> int | None:
        """Index j with config in the encoding family of gammas[j], if any."""
        state = None
        c = {loc: triple[2] for loc, triple in config.tokens}
        for q, loc in bare.items():
            n = c.pop(loc, 0)
            if n == 1 and state is None:
                state = q
            elif n:
                return None
        if state is None:
            return None
        nu1 = c.pop(sp.counter_loc(1), 0)
        nu2 = c.pop(sp.counter_loc(2), 0)
        c.pop(sp.l0, None)
        for loc in junk_ok - {sp.counter_loc(1), sp.counter_loc(2)}:
            c.pop(loc, None)
        if any(c.values()):
            return None
        gamma = TcmConfiguration(state, nu1, nu2)
        try:
            return gammas.index(gamma)
        except ValueError:
            return None

    def match_second_step(config: Configuration):
        """The (q, t, pebble) shape right after the first-step acknowledgement."""
        c = {loc: triple[2] for loc, triple in config.tokens}
        if c.pop(sp.l0, 0) < 1:
            return None
        state = trans = None
        for q in machine.states:
            n = c.pop(sp.loc({q: 1, "b": 1}), 0)
            if n == 1 and state is None:
                state = q
            elif n:
                return None
        for name, t in tnames.items():
            n = c.pop(sp.loc({name: 1, "b": 1}), 0)
            if n == 1 and trans is None:
                trans = t
            elif n:
                return None
        if state is None or trans is None or trans.source != state:
            return None
        i = trans.counter
        if trans.kind == "inc":
            if c.pop(sp.loc({f"a{i}": 1, "b": 1}), 0) != 1:
                return None
        elif trans.kind == "dec":
            if c.pop(sp.loc({f"a{i}": 3, "b": 3}), 0) != 1:
                return None
        for loc in junk_ok:
            c.pop(loc, None)
        if any(c.values()):
            return None
        return state, trans

    def move(mapping: Mapping[tuple[Location, Location], int]) -> Transition:
        return Transition.of(SYSTEM, {k: (0, 0, n) for k, n in mapping.items()})

    def fn(config: Configuration) -> Transition | None:
        if any(t[0] or t[1] for _, t in config.tokens):
            return None  # the simulation plays on shared tokens only
        support = {loc for loc, _ in config.tokens}
        if support <= {sp.l0} and config.count(sp.l0, "se") >= 1:
            if not run:
                return move({(sp.l0, sp.loc({machine.halt: 2})): 1})
            t = run[0][0]
            steps = {
                (sp.l0, bare[machine.init]): 1,
                (sp.l0, sp.loc({t.name: 1})): 1,
            }
            if t.kind == "inc":
                steps[(sp.l0, sp.loc({f"a{t.counter}": 1}))] = 1
            return move(steps)

        j = match_encoding(config)
        if j is not None:
            if j == len(gammas) - 1:
                qh = machine.halt
                return move({(bare[qh], sp.loc({qh: 2})): 1})
            t = run[j][0]
            steps = {(sp.l0, sp.loc({t.name: 1})): 1}
            if t.kind == "inc":
                steps[(sp.l0, sp.loc({f"a{t.counter}": 1}))] = 1
            elif t.kind == "dec":
                i = t.counter
                steps[(sp.counter_loc(i), sp.loc({f"a{i}": 3, "b": 2}))] = 1
            return move(steps)

        hit = match_second_step(config)
        if hit is not None:
            q, t = hit
            i = t.counter
            steps = {
                (sp.loc({q: 1, "b": 1}), sp.loc({q: 2, "b": 1})): 1,
                (sp.loc({t.name: 1, "b": 1}), sp.loc({t.name: 2, "b": 1})): 1,
                (sp.l0, bare[t.target]): 1,
            }
            if t.kind == "inc":
                steps[(sp.loc({f"a{i}": 1, "b": 1}), sp.loc({f"a{i}": 2, "b": 1}))] = 1
            elif t.kind == "dec":
                steps[(sp.loc({f"a{i}": 3, "b": 3}), sp.loc({f"a{i}": 4, "b": 3}))] = 1
            return move(steps)
        return None

    return fn


# ---------------------------------------------------------------------------
# Library games


def _se_row(entries: Mapping[Location, str], default: str) -> Row:
    return Row.of(
        {loc: _se(spec) for loc, spec in entries.items()}, default=_se(default)
    )


def lemma4_game() -> Game:
    """A game System wins exactly from even numbers of shared tokens.

    One system letter a, one environment letter b, bound 2. The staircase
    rows force tokens to climb pairwise through <a>, <ab>, <a2b>, <a2b2>;
    the extra family punishes any location with more b's than a's.
    """
    ab = Alphabet(("a",), ("b",))
    l0, l1, l2, l3, l4 = (0, 0), (1, 0), (1, 1), (2, 1), (2, 2)

    def bracket(e0, e1, e2, e3, e4) -> Row:
        return Row.of(
            {
                l0: _se(e0),
                l1: _se(e1),
                l2: _se(e2),
                l3: _se(e3),
                l4: _se(e4),
            },
            default=ZERO,
        )

    rows: list[Row] = [
        bracket(">=0", "=2", "=0", "=0", ">=0"),
        bracket(">=0", "=0", "=0", "=2", ">=0"),
        bracket("=0", "=0", "=0", "=0", ">=2"),
        bracket(">=0", "=1", "=1", "=0", ">=0"),
        bracket(">=0", "=0", "=0", "=1", ">=1"),
    ]
    for loc in all_locations(ab, 2):
        if loc[1] > loc[0]:
            rows.append(_se_row({loc: ">=1"}, default=">=0"))
    return Game(ab, 2, ExplicitAcceptance(tuple(rows)))


def lemma4_strategy(config: Configuration) -> Transition | None:
    """Escort shared tokens upwards two at a time."""
    l0, l1, l2, l3 = (0, 0), (1, 0), (1, 1), (2, 1)
    if config.count(l2, "se") == 2:
        return Transition.of(SYSTEM, {(l2, l3): (0, 0, 2)})
    idle = all(config.count(loc, "se") == 0 for loc in (l1, l2, l3))
    if idle and config.count(l0, "se") >= 2:
        return Transition.of(SYSTEM, {(l0, l1): (0, 0, 2)})
    return None


def lemma5_game() -> Game:
    """A game System wins exactly when it has at least as many processes.

    One system letter a, one environment letter b, bound 2, system tokens
    versus environment tokens (shared ones are frozen by every row).
    """
    ab = Alphabet(("a",), ("b",))
    la, lb, l0 = (1, 0), (0, 1), (0, 0)

    def cond(s: str, e: str) -> LocalCondition:
        return LocalCondition.of(s, e, "=0")

    default = cond(">=0", ">=0")
    rows = (
        Row.of({la: cond("=1", "=0"), lb: cond("=0", "=0")}, default=default),
        Row.of({la: cond("=1", "=0"), lb: cond("=0", ">=2")}, default=default),
        Row.of({la: cond("=0", "=0"), lb: cond("=0", ">=1")}, default=default),
        Row.of({l0: cond("=0", "=0")}, default=default),
    )
    return Game(ab, 2, ExplicitAcceptance(rows))


def lemma5_strategy(config: Configuration) -> Transition | None:
    """Answer each environment arrival at <b> by one fresh challenge at <a>."""
    la, l0 = (1, 0), (0, 0)
    if not config.tokens:
        return Transition.empty(SYSTEM)
    if config.count(la, "s") == 1:
        return Transition.of(SYSTEM, {(la, (2, 0)): (1, 0, 0)})
    if config.count(la, "s") == 0 and config.count(l0, "s") >= 1:
        return Transition.of(SYSTEM, {(l0, la): (1, 0, 0)})
    return None


#: Locations with exactly two a's and a different number of d's, or
#: exactly two d's and a different number of a's (bound 3).
_EXAMPLE5_Z = ((0, 2), (1, 2), (2, 0), (2, 1), (2, 3), (3, 2))


def example5_game() -> Game:
    """A game whose acceptance forbids tokens on the marked location set Z."""
    ad = Alphabet(("a",), ("d",))
    row = Row.of({loc: ZERO for loc in _EXAMPLE5_Z}, default=ANY)
    return Game(ad, 3, ExplicitAcceptance((row,)))


def example5_strategy(config: Configuration) -> Transition | None:
    """Open with a pass, then even out every token the environment marked."""
    moves: dict[tuple[Location, Location], tuple[int, int, int]] = {}
    for loc, (n_s, n_e, n_se) in config.tokens:
        if loc not in _EXAMPLE5_Z:
            continue
        i, j = loc
        if n_e or i >= j:
            return None
        moves[(loc, (j, j))] = (n_s, 0, n_se)
    if not moves:
        return Transition.empty(SYSTEM)
    return Transition.of(SYSTEM, moves)


def library_games() -> dict[str, Game | Callable[[Configuration], Transition | None]]:
    """The bundled example games and their hand-written strategies."""
    return {
        "lemma4_game": lemma4_game(),
        "lemma5_game": lemma5_game(),
        "example5_game": example5_game(),
        "lemma4_strategy": lemma4_strategy,
        "lemma5_strategy": lemma5_strategy,
        "example5_strategy": example5_strategy,
    }
