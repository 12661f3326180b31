"""First-order logic over data words.

An execution is a finite sequence of events (a, p): action a performed by
process p. Processes are typed: system processes take system actions only,
environment processes environment actions only, and shared processes both.
An execution with universe P induces a relational structure whose elements
are the processes of P together with the positions 1..|w| of the word:

  * s(x), e(x), se(x)  -- x is a process of that type (false on positions),
  * a(x) for an action a -- x is a position labelled a (false on processes),
  * x < y, +1(x, y)     -- position order and successor (false on processes),
  * x = y               -- element identity,
  * x ~ y               -- same owner: the owner of a process is itself, the
                           owner of a position is the process performing it.

Formulas are first-order over this signature, extended with counting
quantifiers `E>=m y. phi` ("at least m distinct witnesses") and `E==m y. phi`
("exactly m"). `expand_counting` removes the counting sugar; `model_check`
evaluates it natively by counting witnesses, which is equivalent and much
faster on larger universes.

Concrete syntax (ASCII):

    formula  := disj (('->' | '<->') formula)?          right-associative
    disj     := conj ('|' conj)*
    conj     := unary ('&' unary)*
    unary    := '!' unary | quantifier | atom
    quantifier := ('E' | 'A') var '.' formula           body extends maximally
                | 'E' ('>=' | '==') nat var '.' formula
    atom     := 'true' | 'false' | '(' formula ')'
              | ('s' | 'e' | 'se') '(' var ')'
              | action '(' var ')'
              | var ('=' | '~' | '<') var
              | '+1' '(' var ',' var ')'

Precedence: '!' binds tightest, then '&', then '|', then '->'/'<->'.
'a <-> b' is parsed as sugar for '(a -> b) & (b -> a)'.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple

from .errors import FragmentError, ParseError

PROCESS_TYPES = ("s", "e", "se")

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_RESERVED = {"s", "e", "se", "true", "false", "E", "A"}


def _check_identifier(name: str, what: str) -> None:
    if not _IDENT_RE.fullmatch(name):
        raise ValueError(f"{what} {name!r} is not an identifier")
    if name in _RESERVED:
        raise ValueError(f"{what} {name!r} collides with a reserved word")


@dataclass(frozen=True)
class Alphabet:
    """Action alphabet split into system and environment actions."""

    sys_actions: tuple[str, ...]
    env_actions: tuple[str, ...]

    def __post_init__(self):
        for a in self.sys_actions:
            _check_identifier(a, "system action")
        for a in self.env_actions:
            _check_identifier(a, "environment action")
        if not self.sys_actions and not self.env_actions:
            raise ValueError("alphabet must contain at least one action")
        seen = set(self.sys_actions)
        if len(seen) != len(self.sys_actions):
            raise ValueError("duplicate system action")
        for a in self.env_actions:
            if a in seen:
                raise ValueError(f"action {a!r} listed on both sides")
            seen.add(a)
        if len(set(self.env_actions)) != len(self.env_actions):
            raise ValueError("duplicate environment action")

    @property
    def actions(self) -> tuple[str, ...]:
        """All actions, system first, in declaration order."""
        return self.sys_actions + self.env_actions

    def side(self, action: str) -> str:
        """'sys' or 'env', the side the action belongs to."""
        if action in self.sys_actions:
            return "sys"
        if action in self.env_actions:
            return "env"
        raise ValueError(f"unknown action {action!r}")

    def index(self, action: str) -> int:
        """Position of the action in self.actions."""
        try:
            return self.actions.index(action)
        except ValueError:
            raise ValueError(f"unknown action {action!r}") from None


@dataclass(frozen=True)
class ProcessUniverse:
    """Finite process sets: system-only, environment-only, and shared."""

    sys_procs: tuple[int, ...]
    env_procs: tuple[int, ...]
    both_procs: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sys_procs", tuple(sorted(self.sys_procs)))
        object.__setattr__(self, "env_procs", tuple(sorted(self.env_procs)))
        object.__setattr__(self, "both_procs", tuple(sorted(self.both_procs)))
        all_ids = self.sys_procs + self.env_procs + self.both_procs
        if len(set(all_ids)) != len(all_ids):
            raise ValueError("process sets must be pairwise disjoint")
        for p in all_ids:
            if not isinstance(p, int) or p < 0:
                raise ValueError(f"process id must be a natural number, got {p!r}")

    @classmethod
    def of_sizes(cls, k_s: int, k_e: int, k_se: int) -> "ProcessUniverse":
        """Universe with ids 1..k_s, k_s+1..k_s+k_e, and so on."""
        s = tuple(range(1, k_s + 1))
        e = tuple(range(k_s + 1, k_s + k_e + 1))
        se = tuple(range(k_s + k_e + 1, k_s + k_e + k_se + 1))
        return cls(s, e, se)

    @property
    def all_procs(self) -> tuple[int, ...]:
        return tuple(sorted(self.sys_procs + self.env_procs + self.both_procs))

    def type_of(self, p: int) -> str:
        """'s', 'e' or 'se' for a process id."""
        if p in self.sys_procs:
            return "s"
        if p in self.env_procs:
            return "e"
        if p in self.both_procs:
            return "se"
        raise ValueError(f"unknown process {p}")

    def sizes(self) -> tuple[int, int, int]:
        return (len(self.sys_procs), len(self.env_procs), len(self.both_procs))


class Event(NamedTuple):
    action: str
    process: int


@dataclass(frozen=True)
class Execution:
    """A data word: a universe of typed processes plus a sequence of events.

    Typing invariant: a system action may only be performed by a process of
    type s or se, an environment action only by a process of type e or se.
    """

    alphabet: Alphabet
    universe: ProcessUniverse
    events: tuple[Event, ...]

    def __post_init__(self):
        events = tuple(Event(a, p) for (a, p) in self.events)
        object.__setattr__(self, "events", events)
        for ev in events:
            side = self.alphabet.side(ev.action)
            ptype = self.universe.type_of(ev.process)
            if side == "sys" and ptype not in ("s", "se"):
                raise ValueError(
                    f"system action {ev.action!r} on process {ev.process} of type {ptype}"
                )
            if side == "env" and ptype not in ("e", "se"):
                raise ValueError(
                    f"environment action {ev.action!r} on process {ev.process} of type {ptype}"
                )

    def __len__(self) -> int:
        return len(self.events)

    def __bool__(self) -> bool:
        # the empty execution is a perfectly good execution, not a falsy one
        return True


def similar(x: Execution, y: Execution) -> bool:
    """Order-blind equivalence: same universe and same multiset of events."""
    return (
        x.alphabet == y.alphabet
        and x.universe == y.universe
        and Counter(x.events) == Counter(y.events)
    )


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Formula:
    """Base class; all nodes are immutable and hashable."""


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class TypeAtom(Formula):
    ptype: str
    var: str


@dataclass(frozen=True)
class ActionAtom(Formula):
    action: str
    var: str


@dataclass(frozen=True)
class Eq(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Sim(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Lt(Formula):
    left: str
    right: str


@dataclass(frozen=True)
class Succ(Formula):
    """+1(x, y): y is the position immediately after x."""

    left: str
    right: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class CountAtLeast(Formula):
    """E>=m y. body: at least m distinct witnesses for y."""

    count: int
    var: str
    body: Formula


@dataclass(frozen=True)
class CountExactly(Formula):
    """E==m y. body: exactly m distinct witnesses for y."""

    count: int
    var: str
    body: Formula


def conj(parts: Iterable[Formula]) -> Formula:
    """Left-folded conjunction; empty yields true."""
    parts = list(parts)
    if not parts:
        return TrueF()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: Iterable[Formula]) -> Formula:
    """Left-folded disjunction; empty yields false."""
    parts = list(parts)
    if not parts:
        return FalseF()
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def free_vars(phi: Formula) -> frozenset[str]:
    """Free variables of a formula."""
    if isinstance(phi, (TrueF, FalseF)):
        return frozenset()
    if isinstance(phi, (TypeAtom, ActionAtom)):
        return frozenset({phi.var})
    if isinstance(phi, (Eq, Sim, Lt, Succ)):
        return frozenset({phi.left, phi.right})
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or, Implies)):
        return free_vars(phi.left) | free_vars(phi.right)
    if isinstance(phi, (Exists, Forall, CountAtLeast, CountExactly)):
        return free_vars(phi.body) - {phi.var}
    raise TypeError(f"not a formula node: {phi!r}")


def _all_var_names(phi: Formula) -> set[str]:
    """Every variable name occurring in the formula, bound or free."""
    if isinstance(phi, (TrueF, FalseF)):
        return set()
    if isinstance(phi, (TypeAtom, ActionAtom)):
        return {phi.var}
    if isinstance(phi, (Eq, Sim, Lt, Succ)):
        return {phi.left, phi.right}
    if isinstance(phi, Not):
        return _all_var_names(phi.body)
    if isinstance(phi, (And, Or, Implies)):
        return _all_var_names(phi.left) | _all_var_names(phi.right)
    if isinstance(phi, (Exists, Forall, CountAtLeast, CountExactly)):
        return _all_var_names(phi.body) | {phi.var}
    raise TypeError(f"not a formula node: {phi!r}")


def _rename_free(phi: Formula, old: str, new: str) -> Formula:
    """Rename free occurrences of a variable; `new` must be fresh in phi."""
    if isinstance(phi, (TrueF, FalseF)):
        return phi
    if isinstance(phi, TypeAtom):
        return TypeAtom(phi.ptype, new if phi.var == old else phi.var)
    if isinstance(phi, ActionAtom):
        return ActionAtom(phi.action, new if phi.var == old else phi.var)
    if isinstance(phi, (Eq, Sim, Lt, Succ)):
        return type(phi)(
            new if phi.left == old else phi.left,
            new if phi.right == old else phi.right,
        )
    if isinstance(phi, Not):
        return Not(_rename_free(phi.body, old, new))
    if isinstance(phi, (And, Or, Implies)):
        return type(phi)(
            _rename_free(phi.left, old, new), _rename_free(phi.right, old, new)
        )
    if isinstance(phi, (Exists, Forall)):
        if phi.var == old:
            return phi
        return type(phi)(phi.var, _rename_free(phi.body, old, new))
    if isinstance(phi, (CountAtLeast, CountExactly)):
        if phi.var == old:
            return phi
        return type(phi)(phi.count, phi.var, _rename_free(phi.body, old, new))
    raise TypeError(f"not a formula node: {phi!r}")


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<sym><->|->|>=|==|\+1|[()!&|=~<.,])|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Token stream as (kind, value, offset) triples."""
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ParseError(f"unexpected character {rest[0]!r}", pos)
        if m.lastgroup == "sym":
            out.append(("sym", m.group("sym"), m.start("sym")))
        elif m.lastgroup == "int":
            out.append(("int", m.group("int"), m.start("int")))
        else:
            out.append(("ident", m.group("ident"), m.start("ident")))
        pos = m.end()
    return out


class _FormulaParser:
    def __init__(self, text: str, alphabet: Alphabet):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.alphabet = alphabet

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of formula")
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.next()
        if tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1]!r}", tok[2])

    def parse(self) -> Formula:
        phi = self.formula()
        tok = self.peek()
        if tok is not None:
            raise ParseError(f"trailing input starting at {tok[1]!r}", tok[2])
        return phi

    def formula(self) -> Formula:
        left = self.disjunction()
        tok = self.peek()
        if tok and tok[1] == "->":
            self.next()
            right = self.formula()
            return Implies(left, right)
        if tok and tok[1] == "<->":
            self.next()
            right = self.formula()
            return And(Implies(left, right), Implies(right, left))
        return left

    def disjunction(self) -> Formula:
        out = self.conjunction()
        while True:
            tok = self.peek()
            if tok and tok[1] == "|":
                self.next()
                out = Or(out, self.conjunction())
            else:
                return out

    def conjunction(self) -> Formula:
        out = self.unary()
        while True:
            tok = self.peek()
            if tok and tok[1] == "&":
                self.next()
                out = And(out, self.unary())
            else:
                return out

    def unary(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of formula")
        if tok[1] == "!":
            self.next()
            return Not(self.unary())
        if tok[0] == "ident" and tok[1] in ("E", "A"):
            return self.quantifier()
        return self.atom()

    def quantifier(self) -> Formula:
        kind, kw, off = self.next()
        if kw == "A":
            var = self.variable()
            self.expect(".")
            return Forall(var, self.formula())
        tok = self.peek()
        if tok and tok[1] in (">=", "=="):
            self.next()
            mtok = self.next()
            if mtok[0] != "int":
                raise ParseError(f"expected a count, found {mtok[1]!r}", mtok[2])
            m = int(mtok[1])
            var = self.variable()
            self.expect(".")
            body = self.formula()
            if tok[1] == ">=":
                return CountAtLeast(m, var, body)
            return CountExactly(m, var, body)
        var = self.variable()
        self.expect(".")
        return Exists(var, self.formula())

    def variable(self) -> str:
        tok = self.next()
        if tok[0] != "ident":
            raise ParseError(f"expected a variable, found {tok[1]!r}", tok[2])
        name = tok[1]
        if name in _RESERVED:
            raise ParseError(f"reserved word {name!r} used as a variable", tok[2])
        if name in self.alphabet.actions:
            raise ParseError(f"action name {name!r} used as a variable", tok[2])
        return name

    def atom(self) -> Formula:
        tok = self.next()
        kind, val, off = tok
        if val == "(":
            phi = self.formula()
            self.expect(")")
            return phi
        if val == "true":
            return TrueF()
        if val == "false":
            return FalseF()
        if val == "+1":
            self.expect("(")
            x = self.variable()
            self.expect(",")
            y = self.variable()
            self.expect(")")
            return Succ(x, y)
        if kind != "ident":
            raise ParseError(f"expected an atom, found {val!r}", off)
        nxt = self.peek()
        if nxt and nxt[1] == "(":
            self.next()
            var = self.variable()
            self.expect(")")
            if val in PROCESS_TYPES:
                return TypeAtom(val, var)
            if val in self.alphabet.actions:
                return ActionAtom(val, var)
            raise ParseError(f"unknown action {val!r}", off)
        if val in self.alphabet.actions:
            raise ParseError(f"action name {val!r} used as a variable", off)
        if val in _RESERVED:
            raise ParseError(f"reserved word {val!r} used as a variable", off)
        rel = self.next()
        if rel[1] == "=":
            return Eq(val, self.variable())
        if rel[1] == "~":
            return Sim(val, self.variable())
        if rel[1] == "<":
            return Lt(val, self.variable())
        raise ParseError(f"expected a relation after {val!r}, found {rel[1]!r}", rel[2])


def parse_formula(text: str, alphabet: Alphabet) -> Formula:
    """Parse concrete syntax; raises ParseError with an offset on bad input."""
    return _FormulaParser(text, alphabet).parse()


_LEVEL_BOTTOM, _LEVEL_OR, _LEVEL_AND, _LEVEL_UNARY, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _format(phi: Formula, required: int) -> str:
    if isinstance(phi, TrueF):
        return "true"
    if isinstance(phi, FalseF):
        return "false"
    if isinstance(phi, TypeAtom):
        return f"{phi.ptype}({phi.var})"
    if isinstance(phi, ActionAtom):
        return f"{phi.action}({phi.var})"
    if isinstance(phi, Eq):
        return f"{phi.left} = {phi.right}"
    if isinstance(phi, Sim):
        return f"{phi.left} ~ {phi.right}"
    if isinstance(phi, Lt):
        return f"{phi.left} < {phi.right}"
    if isinstance(phi, Succ):
        return f"+1({phi.left}, {phi.right})"

    if isinstance(phi, Not):
        body = _format(phi.body, _LEVEL_UNARY)
        text, level = f"!{body}", _LEVEL_UNARY
    elif isinstance(phi, And):
        text = f"{_format(phi.left, _LEVEL_AND)} & {_format(phi.right, _LEVEL_UNARY)}"
        level = _LEVEL_AND
    elif isinstance(phi, Or):
        text = f"{_format(phi.left, _LEVEL_OR)} | {_format(phi.right, _LEVEL_AND)}"
        level = _LEVEL_OR
    elif isinstance(phi, Implies):
        text = f"{_format(phi.left, _LEVEL_OR)} -> {_format(phi.right, _LEVEL_BOTTOM)}"
        level = _LEVEL_BOTTOM
    elif isinstance(phi, Exists):
        text = f"E {phi.var}. {_format(phi.body, _LEVEL_BOTTOM)}"
        level = _LEVEL_BOTTOM
    elif isinstance(phi, Forall):
        text = f"A {phi.var}. {_format(phi.body, _LEVEL_BOTTOM)}"
        level = _LEVEL_BOTTOM
    elif isinstance(phi, CountAtLeast):
        text = f"E>={phi.count} {phi.var}. {_format(phi.body, _LEVEL_BOTTOM)}"
        level = _LEVEL_BOTTOM
    elif isinstance(phi, CountExactly):
        text = f"E=={phi.count} {phi.var}. {_format(phi.body, _LEVEL_BOTTOM)}"
        level = _LEVEL_BOTTOM
    else:
        raise TypeError(f"not a formula node: {phi!r}")
    if level < required:
        return f"({text})"
    return text


def format_formula(phi: Formula) -> str:
    """Concrete syntax; parse_formula(format_formula(phi)) == phi."""
    return _format(phi, _LEVEL_BOTTOM)


# ---------------------------------------------------------------------------
# Evaluation

# An element of the structure: ("proc", process id) or ("pos", 1-based index).
Element = tuple[str, int]


def proc_elem(p: int) -> Element:
    return ("proc", p)


def pos_elem(i: int) -> Element:
    return ("pos", i)


class _Structure:
    """The relational structure of one execution, precomputed for evaluation."""

    def __init__(self, x: Execution):
        self.x = x
        self.elements: list[Element] = [("proc", p) for p in x.universe.all_procs]
        self.elements += [("pos", i) for i in range(1, len(x.events) + 1)]
        self.owner: dict[Element, int] = {}
        for p in x.universe.all_procs:
            self.owner[("proc", p)] = p
        for i, ev in enumerate(x.events, start=1):
            self.owner[("pos", i)] = ev.process

    def has_type(self, el: Element, ptype: str) -> bool:
        return el[0] == "proc" and self.x.universe.type_of(el[1]) == ptype

    def has_action(self, el: Element, action: str) -> bool:
        return el[0] == "pos" and self.x.events[el[1] - 1].action == action


def model_check(
    x: Execution, phi: Formula, interp: Mapping[str, Element] | None = None
) -> bool:
    """Evaluate a formula on an execution.

    `interp` must cover every free variable of phi (sentences need none).
    Raises ValueError on an uncovered free variable or an action not in the
    execution's alphabet.
    """
    for name in sorted(free_vars(phi)):
        if interp is None or name not in interp:
            raise ValueError(f"free variable {name!r} without interpretation")
    st = _Structure(x)
    env: dict[str, Element] = dict(interp) if interp else {}
    universe = set(st.elements)
    for name, el in env.items():
        if el not in universe:
            raise ValueError(f"variable {name!r} maps to {el!r}, outside the universe")

    def ev(phi: Formula) -> bool:
        if isinstance(phi, TrueF):
            return True
        if isinstance(phi, FalseF):
            return False
        if isinstance(phi, TypeAtom):
            return st.has_type(env[phi.var], phi.ptype)
        if isinstance(phi, ActionAtom):
            if phi.action not in x.alphabet.actions:
                raise ValueError(f"unknown action {phi.action!r}")
            return st.has_action(env[phi.var], phi.action)
        if isinstance(phi, Eq):
            return env[phi.left] == env[phi.right]
        if isinstance(phi, Sim):
            return st.owner[env[phi.left]] == st.owner[env[phi.right]]
        if isinstance(phi, Lt):
            a, b = env[phi.left], env[phi.right]
            return a[0] == "pos" and b[0] == "pos" and a[1] < b[1]
        if isinstance(phi, Succ):
            a, b = env[phi.left], env[phi.right]
            return a[0] == "pos" and b[0] == "pos" and b[1] == a[1] + 1
        if isinstance(phi, Not):
            return not ev(phi.body)
        if isinstance(phi, And):
            return ev(phi.left) and ev(phi.right)
        if isinstance(phi, Or):
            return ev(phi.left) or ev(phi.right)
        if isinstance(phi, Implies):
            return (not ev(phi.left)) or ev(phi.right)
        if isinstance(phi, Exists):
            old = env.get(phi.var)
            try:
                for el in st.elements:
                    env[phi.var] = el
                    if ev(phi.body):
                        return True
                return False
            finally:
                _restore(env, phi.var, old)
        if isinstance(phi, Forall):
            old = env.get(phi.var)
            try:
                for el in st.elements:
                    env[phi.var] = el
                    if not ev(phi.body):
                        return False
                return True
            finally:
                _restore(env, phi.var, old)
        if isinstance(phi, (CountAtLeast, CountExactly)):
            target = phi.count
            stop = target if isinstance(phi, CountAtLeast) else target + 1
            found = 0
            old = env.get(phi.var)
            try:
                for el in st.elements:
                    env[phi.var] = el
                    if ev(phi.body):
                        found += 1
                        if found >= stop:
                            break
            finally:
                _restore(env, phi.var, old)
            if isinstance(phi, CountAtLeast):
                return found >= target
            return found == target
        raise TypeError(f"not a formula node: {phi!r}")

    return ev(phi)


def _restore(env: dict[str, Element], var: str, old: Element | None) -> None:
    if old is None:
        env.pop(var, None)
    else:
        env[var] = old


# ---------------------------------------------------------------------------
# Counting expansion, rank, fragments


def expand_counting(phi: Formula) -> Formula:
    """Replace counting quantifiers by plain first-order quantification.

    E>=m y. psi becomes m nested existentials over fresh copies of y, pairwise
    distinct, each satisfying psi; E>=0 becomes true. E==m becomes the
    conjunction of E>=m and the negation of E>=m+1 (with the vacuous E>=0
    conjunct simplified away). Truth values are preserved.
    """
    used = _all_var_names(phi)

    def fresh(base: str, i: int) -> str:
        name = f"{base}{i}"
        while name in used:
            name += "_"
        used.add(name)
        return name

    def at_least(m: int, var: str, body: Formula) -> Formula:
        if m == 0:
            return TrueF()
        if m == 1:
            return Exists(var, go(body))
        names = [fresh(var, i) for i in range(1, m + 1)]
        inner = go(body)
        parts = [
            Not(Eq(names[i], names[j]))
            for i in range(m)
            for j in range(i + 1, m)
        ]
        parts += [_rename_free(inner, var, n) for n in names]
        out = conj(parts)
        for n in reversed(names):
            out = Exists(n, out)
        return out

    def go(phi: Formula) -> Formula:
        if isinstance(phi, (TrueF, FalseF, TypeAtom, ActionAtom, Eq, Sim, Lt, Succ)):
            return phi
        if isinstance(phi, Not):
            return Not(go(phi.body))
        if isinstance(phi, (And, Or, Implies)):
            return type(phi)(go(phi.left), go(phi.right))
        if isinstance(phi, (Exists, Forall)):
            return type(phi)(phi.var, go(phi.body))
        if isinstance(phi, CountAtLeast):
            return at_least(phi.count, phi.var, phi.body)
        if isinstance(phi, CountExactly):
            if phi.count == 0:
                return Not(at_least(1, phi.var, phi.body))
            return And(
                at_least(phi.count, phi.var, phi.body),
                Not(at_least(phi.count + 1, phi.var, phi.body)),
            )
        raise TypeError(f"not a formula node: {phi!r}")

    return go(phi)


def quantifier_rank(phi: Formula) -> int:
    """Quantifier nesting depth of expand_counting(phi), computed directly.

    A counting quantifier E>=m contributes m nested existentials (0 for m=0),
    E==m contributes m+1 (the deeper of its two halves).
    """
    if isinstance(phi, (TrueF, FalseF, TypeAtom, ActionAtom, Eq, Sim, Lt, Succ)):
        return 0
    if isinstance(phi, Not):
        return quantifier_rank(phi.body)
    if isinstance(phi, (And, Or, Implies)):
        return max(quantifier_rank(phi.left), quantifier_rank(phi.right))
    if isinstance(phi, (Exists, Forall)):
        return 1 + quantifier_rank(phi.body)
    if isinstance(phi, CountAtLeast):
        if phi.count == 0:
            return 0
        return phi.count + quantifier_rank(phi.body)
    if isinstance(phi, CountExactly):
        return phi.count + 1 + quantifier_rank(phi.body)
    raise TypeError(f"not a formula node: {phi!r}")


def fragment_check(phi: Formula, allowed: Iterable[str]) -> bool:
    """True iff phi only uses relations from `allowed` among {~, <, +1}.

    Equality, type atoms and action atoms are part of every fragment.
    """
    allowed = frozenset(allowed)
    for rel in allowed:
        if rel not in ("~", "<", "+1"):
            raise ValueError(f"unknown relation {rel!r}")

    def used(phi: Formula) -> frozenset[str]:
        if isinstance(phi, Sim):
            return frozenset({"~"})
        if isinstance(phi, Lt):
            return frozenset({"<"})
        if isinstance(phi, Succ):
            return frozenset({"+1"})
        if isinstance(phi, (TrueF, FalseF, TypeAtom, ActionAtom, Eq)):
            return frozenset()
        if isinstance(phi, Not):
            return used(phi.body)
        if isinstance(phi, (And, Or, Implies)):
            return used(phi.left) | used(phi.right)
        if isinstance(phi, (Exists, Forall, CountAtLeast, CountExactly)):
            return used(phi.body)
        raise TypeError(f"not a formula node: {phi!r}")

    return used(phi) <= allowed


def require_fragment(phi: Formula, allowed: Iterable[str], context: str) -> None:
    """Raise FragmentError unless fragment_check passes."""
    if not fragment_check(phi, allowed):
        allowed_text = ", ".join(sorted(allowed)) or "none"
        raise FragmentError(
            f"{context} requires the fragment with relations {{{allowed_text}}}"
        )
