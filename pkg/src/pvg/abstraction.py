"""Counting abstraction of executions.

Fix a bound B >= 1. The B-abstraction of an execution maps every process to
its *location*: the vector counting, per action, how many times the process
performed that action, with counts saturated at B. A *configuration* forgets
process identities and records, per location, how many processes of each type
(s, e, se) sit there. Two executions with the same B-abstraction satisfy the
same sentences of quantifier rank at most B in the order-free fragment; the
abstraction is also order-blind, so it factors through the multiset of events.

Locations are plain tuples of saturated counts, indexed by the alphabet's
action order (system actions first). The zero location is written l0.

A (type, location) pair is a *profile*. A profile is realizable when the
typing discipline admits it: an s-process never performs environment actions,
an e-process never system actions. `canonical_execution` inverts the
abstraction by building one minimal execution per token of a realizable
configuration, saturated counts realized as exactly B occurrences.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

from .logic import Alphabet, Event, Execution, ProcessUniverse

Location = tuple[int, ...]
Triple = tuple[int, int, int]

TYPE_ORDER = ("s", "e", "se")
TYPE_INDEX = {"s": 0, "e": 1, "se": 2}


def loc_zero(alphabet: Alphabet) -> Location:
    """The initial location l0: no action performed yet."""
    return (0,) * len(alphabet.actions)


def loc_add(loc: Location, word: Iterable[str], alphabet: Alphabet, bound: int) -> Location:
    """Location reached after performing `word`, counts saturated at `bound`."""
    counts = list(loc)
    for action in word:
        i = alphabet.index(action)
        counts[i] = min(bound, counts[i] + 1)
    return tuple(counts)


def loc_of(alphabet: Alphabet, bound: int, counts: Mapping[str, int]) -> Location:
    """Location from an action->count mapping (absent actions count 0)."""
    for action, n in counts.items():
        alphabet.index(action)
        if not 0 <= n <= bound:
            raise ValueError(f"count {n} for {action!r} outside 0..{bound}")
    return tuple(counts.get(a, 0) for a in alphabet.actions)


def loc_render(loc: Location, alphabet: Alphabet) -> str:
    """Human-readable form like 'a^2 b', or 'l0' for the zero location."""
    parts = []
    for action, n in zip(alphabet.actions, loc):
        if n == 1:
            parts.append(action)
        elif n > 1:
            parts.append(f"{action}^{n}")
    return " ".join(parts) if parts else "l0"


def profile_realizable(ptype: str, loc: Location, alphabet: Alphabet) -> bool:
    """Whether a process of this type can ever reach this location."""
    n_sys = len(alphabet.sys_actions)
    if ptype == "s":
        return all(c == 0 for c in loc[n_sys:])
    if ptype == "e":
        return all(c == 0 for c in loc[:n_sys])
    if ptype == "se":
        return True
    raise ValueError(f"unknown process type {ptype!r}")


def all_locations(alphabet: Alphabet, bound: int) -> Iterator[Location]:
    """All (bound+1)^|A| locations, in lexicographic order."""
    return itertools.product(range(bound + 1), repeat=len(alphabet.actions))


def realizable_profiles(alphabet: Alphabet, bound: int) -> list[tuple[str, Location]]:
    """All realizable (type, location) pairs, in a fixed order."""
    out = []
    for ptype in TYPE_ORDER:
        for loc in all_locations(alphabet, bound):
            if profile_realizable(ptype, loc, alphabet):
                out.append((ptype, loc))
    return out


@dataclass(frozen=True)
class Configuration:
    """Multiset of typed tokens over locations, at a fixed bound.

    `tokens` is canonically sorted by location and contains no zero triples,
    so configurations compare and hash structurally.
    """

    alphabet: Alphabet
    bound: int
    tokens: tuple[tuple[Location, Triple], ...]

    def __post_init__(self):
        if self.bound < 1:
            raise ValueError("bound must be at least 1")
        width = len(self.alphabet.actions)
        cleaned = []
        seen = set()
        for loc, triple in sorted(self.tokens):
            loc = tuple(loc)
            triple = tuple(triple)
            if len(loc) != width:
                raise ValueError(f"location {loc} does not match the alphabet")
            if any(not 0 <= c <= self.bound for c in loc):
                raise ValueError(f"location {loc} outside bound {self.bound}")
            if len(triple) != 3 or any(n < 0 for n in triple):
                raise ValueError(f"bad token counts {triple}")
            if loc in seen:
                raise ValueError(f"duplicate location {loc}")
            seen.add(loc)
            if triple != (0, 0, 0):
                cleaned.append((loc, triple))
        object.__setattr__(self, "tokens", tuple(cleaned))

    @classmethod
    def of(
        cls, alphabet: Alphabet, bound: int, tokens: Mapping[Location, Triple]
    ) -> "Configuration":
        return cls(alphabet, bound, tuple(tokens.items()))

    @classmethod
    def _of_canonical(
        cls, alphabet: Alphabet, bound: int, tokens: tuple
    ) -> "Configuration":
        """Unvalidated constructor for internal hot paths.

        The caller guarantees `tokens` is already canonical: sorted by
        location, no duplicates, no zero triples, all counts within range.
        """
        cfg = object.__new__(cls)
        object.__setattr__(cfg, "alphabet", alphabet)
        object.__setattr__(cfg, "bound", bound)
        object.__setattr__(cfg, "tokens", tokens)
        return cfg

    @classmethod
    def initial(cls, alphabet: Alphabet, bound: int, k_s: int, k_e: int, k_se: int) -> "Configuration":
        """All tokens at the zero location."""
        return cls.of(alphabet, bound, {loc_zero(alphabet): (k_s, k_e, k_se)})

    def get(self, loc: Location) -> Triple:
        for l, triple in self.tokens:
            if l == loc:
                return triple
        return (0, 0, 0)

    def count(self, loc: Location, ptype: str) -> int:
        return self.get(loc)[TYPE_INDEX[ptype]]

    def occupied(self) -> tuple[Location, ...]:
        return tuple(loc for loc, _ in self.tokens)

    def totals(self) -> Triple:
        sums = [0, 0, 0]
        for _, triple in self.tokens:
            for i in range(3):
                sums[i] += triple[i]
        return tuple(sums)

    def as_dict(self) -> dict[Location, Triple]:
        return dict(self.tokens)

    def is_realizable(self) -> bool:
        """All occupied profiles respect the typing discipline."""
        for loc, (n_s, n_e, _) in self.tokens:
            if n_s and not profile_realizable("s", loc, self.alphabet):
                return False
            if n_e and not profile_realizable("e", loc, self.alphabet):
                return False
        return True


def abstract_execution(x: Execution, bound: int) -> Configuration:
    """The B-abstraction: per-process saturated action counts, identities dropped."""
    if bound < 1:
        raise ValueError("bound must be at least 1")
    per_proc: dict[int, list[int]] = {
        p: [0] * len(x.alphabet.actions) for p in x.universe.all_procs
    }
    for ev in x.events:
        counts = per_proc[ev.process]
        i = x.alphabet.index(ev.action)
        counts[i] = min(bound, counts[i] + 1)
    tokens: dict[Location, list[int]] = {}
    for p, counts in per_proc.items():
        loc = tuple(counts)
        triple = tokens.setdefault(loc, [0, 0, 0])
        triple[TYPE_INDEX[x.universe.type_of(p)]] += 1
    return Configuration.of(x.alphabet, bound, {l: tuple(t) for l, t in tokens.items()})


def canonical_execution(config: Configuration) -> Execution:
    """One execution whose abstraction is `config`, saturation realized exactly.

    Processes get fresh ids: system processes first, then environment, then
    shared, each group walking the locations in sorted order. Every process
    emits its letters in alphabet order. Raises ValueError if the
    configuration puts an s-token on an environment letter or an e-token on a
    system letter (no execution abstracts to it).
    """
    alphabet = config.alphabet
    if not config.is_realizable():
        raise ValueError("configuration is not the abstraction of any execution")
    groups: dict[str, list[Location]] = {"s": [], "e": [], "se": []}
    for loc, triple in config.tokens:
        for ptype, n in zip(TYPE_ORDER, triple):
            groups[ptype].extend([loc] * n)
    ids: dict[str, tuple[int, ...]] = {}
    next_id = 1
    for ptype in TYPE_ORDER:
        ids[ptype] = tuple(range(next_id, next_id + len(groups[ptype])))
        next_id += len(groups[ptype])
    universe = ProcessUniverse(ids["s"], ids["e"], ids["se"])
    events: list[Event] = []
    for ptype in TYPE_ORDER:
        for p, loc in zip(ids[ptype], groups[ptype]):
            for action, n in zip(alphabet.actions, loc):
                events.extend(Event(action, p) for _ in range(n))
    return Execution(alphabet, universe, tuple(events))


def potential(config: Configuration) -> int:
    """Sum of all location entries over all tokens.

    Every effective move strictly increases it, which bounds play length.
    """
    total = 0
    for loc, triple in config.tokens:
        total += sum(loc) * sum(triple)
    return total
