"""Counting normal form for order-free sentences.

Every sentence of the order-free fragment (relations ~ and = only) is, over
executions abstracted at a large enough bound B, equivalent to a positive
boolean combination of *counting constraints*: "the number of processes of
type theta at location l is = k (or >= k)". A normal form is a disjunction
of clauses, each clause a conjunction of such constraints; profiles absent
from a clause are unconstrained.

`normalize` computes the normal form without enumerating configurations. It
evaluates the sentence symbolically over a parametric configuration with one
natural-number variable per realizable profile:

  * quantifiers range over element *orbits* — for each pinned class, its
    process element, its already-pinned occurrences, and its fresh
    occurrences; and for each profile, a fresh class (guarded by the linear
    constraint that one is still available);
  * within a class the letter counts are concrete, so class-local counting
    collapses to constants;
  * global counting quantifiers become linear constraints over the profile
    variables, by summing orbit sizes grouped by the truth of the body;
  * the resulting propositional formula over linear atoms is put into
    disjunctive normal form and each clause into per-variable intervals.

The intervals are finally projected onto the capped domain {0..m_cap, over}:
a capped count function belongs to the normal form iff its representative
point (k for k <= m_cap, m_cap+1 for "over") satisfies the intervals — the
same set a direct enumeration of capped count functions would produce, at a
cost polynomial in the number of realizable profiles instead.

Counts are compared against the *abstraction* of an execution, so agreement
with direct model checking (`nf_holds(normalize(phi, A), abstract_execution(x,
B)) == model_check(x, phi)`) requires B at least `threshold(phi)` and m_cap
at least the largest constant needed; the defaults guarantee both.
"""

from __future__ import annotations

import itertools
import math
from contextlib import contextmanager
from dataclasses import dataclass

from .abstraction import (
    TYPE_INDEX,
    TYPE_ORDER,
    Configuration,
    Location,
    canonical_execution,
    profile_realizable,
    realizable_profiles,
)
from .errors import NormalizeBudgetError
from .logic import (
    ActionAtom,
    Alphabet,
    And,
    CountAtLeast,
    CountExactly,
    Eq,
    Execution,
    Exists,
    FalseF,
    Forall,
    Formula,
    Implies,
    Not,
    Or,
    Sim,
    TrueF,
    TypeAtom,
    free_vars,
    model_check,
    quantifier_rank,
    require_fragment,
)

DEFAULT_BUDGET = 1_000_000
_MAX_PROFILES = 2048
_MAX_GROUPS = 12


@dataclass(frozen=True)
class CountConstraint:
    """Constraint 'count of (ptype, loc) tokens cmp m' with cmp in {=, >=}."""

    cmp: str
    m: int
    ptype: str
    loc: Location

    def __post_init__(self):
        if self.cmp not in ("=", ">="):
            raise ValueError(f"bad comparison {self.cmp!r}")
        if self.m < 0:
            raise ValueError("negative count")
        if self.ptype not in TYPE_ORDER:
            raise ValueError(f"bad process type {self.ptype!r}")
        object.__setattr__(self, "loc", tuple(self.loc))

    def holds(self, config: Configuration) -> bool:
        n = config.count(self.loc, self.ptype)
        return n == self.m if self.cmp == "=" else n >= self.m

    def sort_key(self):
        return (TYPE_INDEX[self.ptype], self.loc, self.cmp, self.m)


Clause = tuple[CountConstraint, ...]


@dataclass(frozen=True)
class NormalForm:
    """Disjunction of clauses of counting constraints at a fixed bound."""

    alphabet: Alphabet
    bound: int
    clauses: tuple[Clause, ...]


def nf_holds(nf: NormalForm, config: Configuration) -> bool:
    """Evaluate a normal form on a configuration (bounds must agree)."""
    if config.alphabet != nf.alphabet:
        raise ValueError("configuration alphabet does not match the normal form")
    if config.bound != nf.bound:
        raise ValueError(
            f"configuration bound {config.bound} does not match normal form bound {nf.bound}"
        )
    return any(all(c.holds(config) for c in clause) for clause in nf.clauses)


def canonical_normal_form(nf: NormalForm) -> NormalForm:
    """Sorted, deduplicated clauses; constraints vacuous by typing removed.

    A constraint on an unrealizable profile (an s-token on an environment
    letter, an e-token on a system letter) compares against a count that is 0
    on every abstraction of an execution: it is dropped when it accepts 0 and
    kills its whole clause otherwise. Trivial '>= 0' constraints are dropped.
    """
    out = []
    for clause in nf.clauses:
        kept = []
        dead = False
        for c in clause:
            if not profile_realizable(c.ptype, c.loc, nf.alphabet):
                if c.m > 0:
                    dead = True
                    break
                continue
            if c.cmp == ">=" and c.m == 0:
                continue
            kept.append(c)
        if dead:
            continue
        out.append(tuple(sorted(set(kept), key=CountConstraint.sort_key)))
    unique = sorted(set(out), key=lambda cl: tuple(c.sort_key() for c in cl))
    return NormalForm(nf.alphabet, nf.bound, tuple(unique))


def threshold(phi: Formula) -> int:
    """Bound sufficient for the abstraction to determine phi's truth."""
    require_fragment(phi, {"~"}, "threshold")
    return max(1, quantifier_rank(phi))


def holds_on_config(phi: Formula, config: Configuration) -> bool:
    """Truth of phi on the canonical execution of a realizable configuration."""
    return model_check(canonical_execution(config), phi)


# ---------------------------------------------------------------------------
# Symbolic evaluation
#
# Linear expressions are (coeffs, const) with coeffs a sorted tuple of
# (profile index, positive coefficient). Boolean expressions are nested
# tuples: True/False, ("atom", coeffs, rhs) meaning "sum >= rhs",
# ("not", e), ("and", parts), ("or", parts).

_Lin = tuple[tuple[tuple[int, int], ...], int]


def _lin_const(n: int) -> _Lin:
    return ((), n)


def _lin_var(p: int, coeff: int = 1, const: int = 0) -> _Lin:
    return (((p, coeff),), const)


def _lin_add(a: _Lin, b: _Lin) -> _Lin:
    coeffs = dict(a[0])
    for p, c in b[0]:
        coeffs[p] = coeffs.get(p, 0) + c
    return (tuple(sorted(coeffs.items())), a[1] + b[1])


def _lin_scale(a: _Lin, k: int) -> _Lin:
    return (tuple((p, c * k) for p, c in a[0]), a[1] * k)


def _atom_ge(lin: _Lin, m: int):
    """Boolean expression for lin >= m."""
    coeffs, const = lin
    rhs = m - const
    if not coeffs:
        return rhs <= 0
    if rhs <= 0:
        return True
    return ("atom", coeffs, rhs)


def _band(*parts):
    flat = []
    for p in parts:
        if p is False:
            return False
        if p is True:
            continue
        if p[0] == "and":
            flat.extend(p[1])
        else:
            flat.append(p)
    if not flat:
        return True
    if len(flat) == 1:
        return flat[0]
    return ("and", tuple(flat))


def _bor(*parts):
    flat = []
    for p in parts:
        if p is True:
            return True
        if p is False:
            continue
        if p[0] == "or":
            flat.extend(p[1])
        else:
            flat.append(p)
    if not flat:
        return False
    if len(flat) == 1:
        return flat[0]
    return ("or", tuple(flat))


def _bnot(e):
    if isinstance(e, bool):
        return not e
    if e[0] == "not":
        return e[1]
    return ("not", e)


class _Engine:
    """Class-pebble evaluator over a parametric configuration."""

    def __init__(self, profiles: list[tuple[str, Location]], alphabet: Alphabet, budget: int):
        self.profiles = profiles
        self.alphabet = alphabet
        self.budget = budget
        self.steps = 0
        # each slot: [profile index, {letter index: pinned occurrence count}]
        self.slots: list[list] = []
        self.pinned_classes = [0] * len(profiles)

    def _tick(self):
        self.steps += 1
        if self.steps > self.budget:
            raise NormalizeBudgetError(
                f"normal-form evaluation exceeded its budget of {self.budget} steps"
            )

    # -- element orbits ----------------------------------------------------

    def _options(self):
        """Orbits an element variable can range over, given current pins.

        Returns (avail, size, binder) triples: avail guards nonemptiness,
        size is a linear expression counting the orbit's elements, binder is
        a context manager producing the element reference. The orbits
        partition the elements of every configuration extending the pins.
        """
        out = []
        for s, (p, pinned) in enumerate(self.slots):
            _, loc = self.profiles[p]
            out.append((True, _lin_const(1), self._bind_existing(("proc", s))))
            for letter, occurrences in enumerate(loc):
                if occurrences == 0:
                    continue
                for i in range(pinned.get(letter, 0)):
                    out.append(
                        (True, _lin_const(1), self._bind_existing(("occ", s, letter, i)))
                    )
                fresh = occurrences - pinned.get(letter, 0)
                if fresh > 0:
                    out.append((True, _lin_const(fresh), self._bind_fresh_occ(s, letter)))
        for p, (ptype, loc) in enumerate(self.profiles):
            k = self.pinned_classes[p]
            avail = _atom_ge(_lin_var(p), k + 1)
            remaining = _lin_var(p, 1, -k)
            out.append((avail, remaining, self._bind_fresh_class(p, None)))
            for letter, occurrences in enumerate(loc):
                if occurrences > 0:
                    out.append(
                        (
                            avail,
                            _lin_scale(remaining, occurrences),
                            self._bind_fresh_class(p, letter),
                        )
                    )
        return out

    @contextmanager
    def _bind_existing(self, ref):
        yield ref

    @contextmanager
    def _bind_fresh_occ(self, s: int, letter: int):
        pinned = self.slots[s][1]
        i = pinned.get(letter, 0)
        pinned[letter] = i + 1
        try:
            yield ("occ", s, letter, i)
        finally:
            if i == 0:
                del pinned[letter]
            else:
                pinned[letter] = i

    @contextmanager
    def _bind_fresh_class(self, p: int, letter: int | None):
        s = len(self.slots)
        self.slots.append([p, {} if letter is None else {letter: 1}])
        self.pinned_classes[p] += 1
        try:
            yield ("proc", s) if letter is None else ("occ", s, letter, 0)
        finally:
            self.slots.pop()
            self.pinned_classes[p] -= 1

    # -- evaluation --------------------------------------------------------

    def eval(self, phi: Formula, env: dict):
        self._tick()
        if isinstance(phi, TrueF):
            return True
        if isinstance(phi, FalseF):
            return False
        if isinstance(phi, TypeAtom):
            ref = env[phi.var]
            if ref[0] != "proc":
                return False
            ptype, _ = self.profiles[self.slots[ref[1]][0]]
            return ptype == phi.ptype
        if isinstance(phi, ActionAtom):
            ref = env[phi.var]
            return ref[0] == "occ" and ref[2] == self.alphabet.index(phi.action)
        if isinstance(phi, Eq):
            return env[phi.left] == env[phi.right]
        if isinstance(phi, Sim):
            return env[phi.left][1] == env[phi.right][1]
        if isinstance(phi, Not):
            return _bnot(self.eval(phi.body, env))
        if isinstance(phi, And):
            left = self.eval(phi.left, env)
            if left is False:
                return False
            return _band(left, self.eval(phi.right, env))
        if isinstance(phi, Or):
            left = self.eval(phi.left, env)
            if left is True:
                return True
            return _bor(left, self.eval(phi.right, env))
        if isinstance(phi, Implies):
            left = self.eval(phi.left, env)
            if left is False:
                return True
            return _bor(_bnot(left), self.eval(phi.right, env))
        if isinstance(phi, Exists):
            return self._exists(phi.var, phi.body, env)
        if isinstance(phi, Forall):
            return self._forall(phi.var, phi.body, env)
        if isinstance(phi, CountAtLeast):
            return self._count(phi.var, phi.body, env, phi.count, exact=False)
        if isinstance(phi, CountExactly):
            return self._count(phi.var, phi.body, env, phi.count, exact=True)
        raise TypeError(f"not an order-free formula node: {phi!r}")

    def _with_binding(self, var, body, env, binder):
        old = env.get(var)
        with binder as ref:
            env[var] = ref
            try:
                return self.eval(body, env)
            finally:
                if old is None:
                    env.pop(var, None)
                else:
                    env[var] = old

    def _exists(self, var, body, env):
        parts = []
        for avail, _, binder in self._options():
            sub = self._with_binding(var, body, env, binder)
            parts.append(_band(avail, sub))
        return _bor(*parts)

    def _forall(self, var, body, env):
        parts = []
        for avail, _, binder in self._options():
            sub = self._with_binding(var, body, env, binder)
            parts.append(_bor(_bnot(avail), sub))
        return _band(*parts)

    def _count(self, var, body, env, m: int, exact: bool):
        """Counting quantifier: sum orbit sizes grouped by body truth.

        An orbit whose guard fails has size 0 (the size expression vanishes
        exactly when no fresh class is available), so sizes can be summed
        without conditioning on availability.
        """
        base = _lin_const(0)
        groups: dict = {}
        for avail, size, binder in self._options():
            sub = self._with_binding(var, body, env, binder)
            if sub is False:
                continue
            if sub is True:
                base = _lin_add(base, size)
            else:
                cond, total = groups.setdefault(sub, (sub, _lin_const(0)))
                groups[sub] = (cond, _lin_add(total, size))
        group_list = list(groups.values())
        if len(group_list) > _MAX_GROUPS:
            raise NormalizeBudgetError(
                f"counting quantifier splits into {len(group_list)} symbolic groups"
            )
        parts = []
        for chosen in itertools.product((False, True), repeat=len(group_list)):
            self._tick()
            total = base
            guard_parts = []
            for (cond, size), pick in zip(group_list, chosen):
                if pick:
                    guard_parts.append(cond)
                    total = _lin_add(total, size)
                else:
                    guard_parts.append(_bnot(cond))
            if exact:
                value = _band(_atom_ge(total, m), _bnot(_atom_ge(total, m + 1)))
            else:
                value = _atom_ge(total, m)
            parts.append(_band(*guard_parts, value))
        return _bor(*parts)


# ---------------------------------------------------------------------------
# DNF over linear atoms, interval boxes, capped projection

# A box maps a profile index to an interval (lo, hi); hi None means infinity.
_Box = dict[int, tuple[int, int | None]]


def _nnf(expr, neg: bool):
    if isinstance(expr, bool):
        return expr != neg
    tag = expr[0]
    if tag == "atom":
        _, coeffs, rhs = expr
        return ("le", coeffs, rhs - 1) if neg else ("ge", coeffs, rhs)
    if tag == "not":
        return _nnf(expr[1], not neg)
    if tag == "and":
        return ("or" if neg else "and", tuple(_nnf(p, neg) for p in expr[1]))
    if tag == "or":
        return ("and" if neg else "or", tuple(_nnf(p, neg) for p in expr[1]))
    raise AssertionError(expr)


def _dnf(expr, budget: int) -> list[tuple]:
    """List of literal conjunctions; literals are ('ge'|'le', coeffs, rhs)."""
    if isinstance(expr, bool):
        return [()] if expr else []
    tag = expr[0]
    if tag in ("ge", "le"):
        return [(expr,)]
    if tag == "or":
        out = []
        for p in expr[1]:
            out.extend(_dnf(p, budget))
            if len(out) > budget:
                raise NormalizeBudgetError("disjunctive normal form too large")
        return out
    if tag == "and":
        acc: list[tuple] = [()]
        for p in expr[1]:
            sub = _dnf(p, budget)
            acc = [a + b for a in acc for b in sub]
            if len(acc) > budget:
                raise NormalizeBudgetError("disjunctive normal form too large")
        return acc
    raise AssertionError(expr)


def _literal_boxes(lit) -> list[_Box] | None:
    """Alternative boxes whose union covers a literal; None means 'always'."""
    tag, coeffs, rhs = lit
    if tag == "ge":
        if rhs <= 0:
            return None
        if len(coeffs) == 1:
            ((p, c),) = coeffs
            return [{p: (math.ceil(rhs / c), None)}]
        boxes: list[_Box] = []

        def rec_ge(i: int, remaining: int, acc: dict):
            if remaining <= 0:
                boxes.append({q: (lo, None) for q, lo in acc.items()})
                return
            p, c = coeffs[i]
            if i == len(coeffs) - 1:
                acc2 = dict(acc)
                acc2[p] = math.ceil(remaining / c)
                boxes.append({q: (lo, None) for q, lo in acc2.items()})
                return
            for k in range(math.ceil(remaining / c) + 1):
                if k:
                    acc[p] = k
                rec_ge(i + 1, remaining - k * c, acc)
                acc.pop(p, None)

        rec_ge(0, rhs, {})
        return boxes
    if tag == "le":
        if rhs < 0:
            return []
        if len(coeffs) == 1:
            ((p, c),) = coeffs
            return [{p: (0, rhs // c)}]
        boxes = []

        def rec_le(i: int, remaining: int, acc: dict):
            if i == len(coeffs):
                boxes.append({q: (k, k) for q, k in acc.items()})
                return
            p, c = coeffs[i]
            for k in range(remaining // c + 1):
                acc[p] = k
                rec_le(i + 1, remaining - k * c, acc)
            del acc[p]

        rec_le(0, rhs, {})
        return boxes
    raise AssertionError(lit)


def _merge_boxes(a: _Box, b: _Box) -> _Box | None:
    out = dict(a)
    for p, (lo, hi) in b.items():
        if p in out:
            olo, ohi = out[p]
            lo = max(lo, olo)
            hi = ohi if hi is None else (hi if ohi is None else min(hi, ohi))
        if hi is not None and lo > hi:
            return None
        out[p] = (lo, hi)
    return out


def _clause_boxes(literals, budget: int) -> list[_Box]:
    acc: list[_Box] = [{}]
    for lit in literals:
        alts = _literal_boxes(lit)
        if alts is None:
            continue
        nxt = []
        for box in acc:
            for alt in alts:
                merged = _merge_boxes(box, alt)
                if merged is not None:
                    nxt.append(merged)
        if len(nxt) > budget:
            raise NormalizeBudgetError("interval expansion too large")
        acc = nxt
    return acc


def _box_to_clauses(
    box: _Box, profiles: list[tuple[str, Location]], m_cap: int
) -> list[Clause]:
    """Project a box onto the capped domain {0..m_cap, over}.

    Per variable, the allowed capped values split into runs; a run reaching
    the 'over' representative m_cap+1 becomes one '>=' constraint, any other
    run one '=' constraint per value. The box becomes the product of the
    per-variable alternatives.
    """
    per_var: list[list[CountConstraint]] = []
    for p, (lo, hi) in sorted(box.items()):
        allowed = [
            k for k in range(m_cap + 2) if lo <= k and (hi is None or k <= hi)
        ]
        if not allowed:
            return []
        if len(allowed) == m_cap + 2:
            continue
        ptype, loc = profiles[p]
        runs: list[list[int]] = [[allowed[0]]]
        for k in allowed[1:]:
            if k == runs[-1][-1] + 1:
                runs[-1].append(k)
            else:
                runs.append([k])
        alternatives: list[CountConstraint] = []
        for run in runs:
            if run[-1] == m_cap + 1:
                alternatives.append(CountConstraint(">=", run[0], ptype, loc))
            else:
                alternatives.extend(
                    CountConstraint("=", k, ptype, loc) for k in run
                )
        per_var.append(alternatives)
    return [tuple(combo) for combo in itertools.product(*per_var)]


def _symbolic_boxes(
    phi: Formula, alphabet: Alphabet, bound: int, budget: int
) -> tuple[list[_Box], list[tuple[str, Location]]]:
    profiles = realizable_profiles(alphabet, bound)
    if len(profiles) > _MAX_PROFILES:
        raise NormalizeBudgetError(
            f"{len(profiles)} realizable profiles at bound {bound} "
            f"(limit {_MAX_PROFILES}); the alphabet is too large to normalize"
        )
    engine = _Engine(profiles, alphabet, budget)
    expr = engine.eval(phi, {})
    clause_budget = min(budget, 50_000)
    boxes: list[_Box] = []
    for literals in _dnf(_nnf(expr, False), clause_budget):
        boxes.extend(_clause_boxes(literals, clause_budget))
        if len(boxes) > clause_budget:
            raise NormalizeBudgetError("interval expansion too large")
    return boxes, profiles


def normalize(
    phi: Formula,
    alphabet: Alphabet,
    bound: int | None = None,
    m_cap: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> NormalForm:
    """Counting normal form of a sentence of the order-free fragment.

    `bound` defaults to threshold(phi), `m_cap` to the quantifier rank.
    Raises FragmentError outside the fragment, ValueError on free variables,
    NormalizeBudgetError when the alphabet or the expansion exceeds `budget`.
    """
    require_fragment(phi, {"~"}, "normalize")
    if free_vars(phi):
        raise ValueError("normalize requires a sentence")
    if bound is None:
        bound = threshold(phi)
    if bound < 1:
        raise ValueError("bound must be at least 1")
    if m_cap is None:
        m_cap = quantifier_rank(phi)
    if m_cap < 0:
        raise ValueError("m_cap must be a natural number")
    boxes, profiles = _symbolic_boxes(phi, alphabet, bound, budget)
    clauses: list[Clause] = []
    for box in boxes:
        clauses.extend(_box_to_clauses(box, profiles, m_cap))
        if len(clauses) > min(budget, 50_000):
            raise NormalizeBudgetError("normal form has too many clauses")
    return canonical_normal_form(NormalForm(alphabet, bound, tuple(clauses)))


def satisfiable(
    phi: Formula,
    alphabet: Alphabet,
    count_cap: int | None = None,
    budget: int = DEFAULT_BUDGET,
) -> Execution | None:
    """A model of phi with at most count_cap processes per profile, or None.

    Computes an exact (uncapped) normal form and realizes the least clause:
    '=k' and '>=k' constraints both realized with exactly k processes.
    Clauses demanding more than count_cap processes of some profile are
    skipped; with the default cap (the largest constant in the normal form)
    nothing is skipped and None means phi has no model at all.
    """
    require_fragment(phi, {"~"}, "satisfiable")
    if free_vars(phi):
        raise ValueError("satisfiable requires a sentence")
    bound = threshold(phi)
    boxes, profiles = _symbolic_boxes(phi, alphabet, bound, budget)
    exact_cap = 0
    for box in boxes:
        for lo, hi in box.values():
            exact_cap = max(exact_cap, lo, 0 if hi is None else hi)
    clauses: list[Clause] = []
    for box in boxes:
        clauses.extend(_box_to_clauses(box, profiles, exact_cap))
    nf = canonical_normal_form(NormalForm(alphabet, bound, tuple(clauses)))
    if count_cap is None:
        count_cap = max(
            (c.m for clause in nf.clauses for c in clause), default=0
        )
    for clause in nf.clauses:
        if any(c.m > count_cap for c in clause):
            continue
        tokens: dict[Location, list[int]] = {}
        for c in clause:
            if c.m == 0:
                continue
            triple = tokens.setdefault(c.loc, [0, 0, 0])
            triple[TYPE_INDEX[c.ptype]] = c.m
        config = Configuration.of(
            alphabet, bound, {loc: tuple(t) for loc, t in tokens.items()}
        )
        witness = canonical_execution(config)
        if not model_check(witness, phi):
            raise AssertionError(
                "normal-form clause did not realize a model; "
                "this is a bug in the symbolic evaluator"
            )
        return witness
    return None
