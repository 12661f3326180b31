"""Shared fixtures and seeded generators for the test suite.

Everything random is driven by explicit `random.Random(seed)` instances so
each test is reproducible in isolation.
"""

from __future__ import annotations

import random

import pytest

from pvg import (
    Alphabet,
    CountAtLeast,
    CountExactly,
    Eq,
    Execution,
    Exists,
    FalseF,
    Forall,
    Formula,
    ActionAtom,
    And,
    Implies,
    Not,
    Or,
    ProcessUniverse,
    Sim,
    TrueF,
    TypeAtom,
    fragment_check,
    parse_formula,
    quantifier_rank,
)

# ---------------------------------------------------------------------------
# Reference alphabets and executions


def make_ab_cd() -> Alphabet:
    return Alphabet(("a", "b"), ("c", "d"))


def make_ad() -> Alphabet:
    return Alphabet(("a",), ("d",))


#: The running example: three system processes 1-3, two environment
#: processes 4-5, three shared processes 6-8, and eleven events.
REFERENCE_EVENTS = (
    ("a", 1),
    ("b", 8),
    ("d", 7),
    ("c", 4),
    ("a", 6),
    ("c", 6),
    ("a", 7),
    ("d", 6),
    ("b", 2),
    ("d", 7),
    ("a", 7),
)


def make_reference_execution() -> Execution:
    return Execution(make_ab_cd(), ProcessUniverse.of_sizes(3, 2, 3), REFERENCE_EVENTS)


#: The four reference sentences over A_s={a,b}, A_e={c,d}.  The same φ2/φ4
#: texts also parse over A_s={a}, A_e={d}.
PHI1 = "A x. ((s(x) | se(x)) -> E y. (x ~ y & (a(y) | b(y))))"
PHI2 = "A x. (d(x) -> E y. (x ~ y & a(y)))"
PHI3 = "A x. (d(x) -> E y. (x ~ y & x < y & a(y)))"
PHI4 = "A x. ((E==2 y. (x ~ y & a(y))) <-> (E==2 y. (x ~ y & d(y))))"


@pytest.fixture
def ab_cd() -> Alphabet:
    return make_ab_cd()


@pytest.fixture
def ad() -> Alphabet:
    return make_ad()


@pytest.fixture
def reference_execution() -> Execution:
    return make_reference_execution()


# ---------------------------------------------------------------------------
# Hand-written expansion of the reference equivalence sentence.
#
# Over A_s={a}, A_e={d} and bound 3, "two a's iff two d's per class" is
# equivalent to forbidding, for every process type, every class profile
# whose saturated (a, d) counts lie in
#   Z = {(2,0),(2,1),(2,3),(0,2),(1,2),(3,2)}.

Z_LOCATIONS = ((2, 0), (2, 1), (2, 3), (0, 2), (1, 2), (3, 2))


def _profile_text(loc: tuple[int, int], bound: int = 3) -> str:
    """ψ_{B,ℓ}(y): the class of y has saturated letter counts ℓ."""
    parts = []
    for letter, count in zip(("a", "d"), loc):
        if count < bound:
            parts.append(f"(E=={count} z. (z ~ y & {letter}(z)))")
        else:
            parts.append(f"(E>={bound} z. (z ~ y & {letter}(z)))")
    return " & ".join(parts)


def phi4_hand_text() -> str:
    """The 18-conjunct hand expansion: no class of any type sits in Z."""
    conjuncts = []
    for theta in ("s", "e", "se"):
        for loc in Z_LOCATIONS:
            conjuncts.append(f"(E==0 y. ({theta}(y) & {_profile_text(loc)}))")
    return " & ".join(conjuncts)


# ---------------------------------------------------------------------------
# Seeded random executions


def random_execution(
    rng: random.Random,
    alphabet: Alphabet,
    max_per_type: int = 2,
    max_letters: int = 3,
) -> Execution:
    """A random execution with <= max_per_type processes of each type and
    <= max_letters events per process, events in random interleaving order."""
    k_s = rng.randint(0, max_per_type)
    k_e = rng.randint(0, max_per_type)
    k_se = rng.randint(0, max_per_type)
    universe = ProcessUniverse.of_sizes(k_s, k_e, k_se)
    events = []
    for p in universe.all_procs:
        ptype = universe.type_of(p)
        if ptype == "s":
            letters = alphabet.sys_actions
        elif ptype == "e":
            letters = alphabet.env_actions
        else:
            letters = alphabet.actions
        for _ in range(rng.randint(0, max_letters)):
            events.append((rng.choice(letters), p))
    rng.shuffle(events)
    return Execution(alphabet, universe, tuple(events))


def shuffled_copy(rng: random.Random, x: Execution) -> Execution:
    events = list(x.events)
    rng.shuffle(events)
    return Execution(x.alphabet, x.universe, tuple(events))


# ---------------------------------------------------------------------------
# Seeded random order-free sentences
#
# Used both for the order-blindness property and for cross-checking the
# compiled games against the first-principles synthesis decision.


def _random_formula(rng: random.Random, alphabet: Alphabet, depth: int, vars_: tuple[str, ...]) -> Formula:
    atoms = ["true", "false"]
    if vars_:
        atoms += ["type", "action", "sim", "eq"]
    if depth <= 0 or rng.random() < 0.3:
        kind = rng.choice(atoms)
        if kind == "true":
            return TrueF()
        if kind == "false":
            return FalseF()
        if kind == "type":
            return TypeAtom(rng.choice(("s", "e", "se")), rng.choice(vars_))
        if kind == "action":
            return ActionAtom(rng.choice(alphabet.actions), rng.choice(vars_))
        if kind == "sim":
            return Sim(rng.choice(vars_), rng.choice(vars_))
        return Eq(rng.choice(vars_), rng.choice(vars_))
    kind = rng.choice(("not", "and", "or", "implies", "exists", "forall", "atleast", "exactly"))
    if kind == "not":
        return Not(_random_formula(rng, alphabet, depth - 1, vars_))
    if kind in ("and", "or", "implies"):
        left = _random_formula(rng, alphabet, depth - 1, vars_)
        right = _random_formula(rng, alphabet, depth - 1, vars_)
        node = {"and": And, "or": Or, "implies": Implies}[kind]
        return node(left, right)
    var = f"v{len(vars_)}"
    body = _random_formula(rng, alphabet, depth - 1, vars_ + (var,))
    if kind == "exists":
        return Exists(var, body)
    if kind == "forall":
        return Forall(var, body)
    m = rng.randint(0, 2)
    if kind == "atleast":
        return CountAtLeast(m, var, body)
    return CountExactly(m, var, body)


def random_sentence(
    rng: random.Random, alphabet: Alphabet, max_rank: int = 2, depth: int = 3
) -> Formula:
    """A random order-free sentence with quantifier rank <= max_rank."""
    while True:
        phi = _random_formula(rng, alphabet, depth, ())
        if not fragment_check(phi, {"~"}):  # pragma: no cover - by construction
            continue
        if quantifier_rank(phi) <= max_rank:
            return phi


# ---------------------------------------------------------------------------
# Convenience parsing helper


def parse(text: str, alphabet: Alphabet) -> Formula:
    return parse_formula(text, alphabet)
