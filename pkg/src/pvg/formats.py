"""Text and JSON codecs for every file format the toolkit reads or writes.

Text formats (all allow `#` line comments and free whitespace):

  alphabet declaration      sys: a b; env: c d;
  formula file              alphabet declaration, then a sentence
  execution file            alphabet declaration, then
                            procs sys=1,2,3 env=4,5 both=6,7,8;
                            (a,1)(b,8)(d,7)...
  counter machine file      states q0 qh; init q0; halt qh;
                            t1: q0 --c1==0--> qh;

JSON formats: games, configurations, normal forms, transitions, plays,
positional strategies, solver verdicts, verification reports, decisions
and scan tables.  Serialization is deterministic — keys are emitted in a
fixed order and no timestamps appear in payloads — so identical inputs
produce byte-identical documents.  `write_text_atomic` writes through a
temporary file and renames, so a crash never leaves a partial file.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from typing import Any

from .abstraction import TYPE_ORDER, Configuration, Location
from .cutoff import CutoffBound, Decision, ScanResult
from .errors import ParseError
from .games import (
    ENVIRONMENT,
    SYSTEM,
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
    apply,
)
from .logic import (
    Alphabet,
    Event,
    Execution,
    Formula,
    ProcessUniverse,
    format_formula,
    parse_formula,
)
from .normalform import CountConstraint, NormalForm
from .reductions import TcmTransition, TwoCounterMachine
from .solver import PositionalStrategy, Verdict, VerifyResult

__all__ = [
    "condition_from_json",
    "condition_to_json",
    "config_from_json",
    "config_to_json",
    "decision_to_json",
    "dumps",
    "game_from_json",
    "game_to_json",
    "location_from_json",
    "location_to_json",
    "nf_from_json",
    "nf_to_json",
    "parse_alphabet",
    "parse_execution_file",
    "parse_formula_file",
    "parse_tcm",
    "play_from_json",
    "play_to_json",
    "render_alphabet",
    "render_execution_file",
    "render_formula_file",
    "render_tcm",
    "scan_to_json",
    "strategy_from_json",
    "strategy_to_json",
    "transition_from_json",
    "transition_to_json",
    "verdict_to_json",
    "verify_to_json",
    "write_text_atomic",
]


# ---------------------------------------------------------------------------
# Generic helpers


def dumps(payload: Any) -> str:
    """Deterministic JSON text: fixed indentation, keys in insertion order."""
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def write_text_atomic(path: str, text: str) -> None:
    """Write `text` to `path` all-or-nothing (temp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


def _expect_dict(data: Any, what: str) -> dict:
    if not isinstance(data, dict):
        raise ParseError(f"{what} must be a JSON object, got {type(data).__name__}")
    return data


def _expect_list(data: Any, what: str) -> list:
    if not isinstance(data, list):
        raise ParseError(f"{what} must be a JSON array, got {type(data).__name__}")
    return data


def _expect_nat(data: Any, what: str) -> int:
    if not isinstance(data, int) or isinstance(data, bool) or data < 0:
        raise ParseError(f"{what} must be a nonnegative integer, got {data!r}")
    return data


# ---------------------------------------------------------------------------
# Alphabet declarations


_NAME = r"[A-Za-z_][A-Za-z0-9_]*"
_DECL_RE = re.compile(
    rf"^\s*sys\s*:\s*((?:{_NAME}\s*)*);\s*env\s*:\s*((?:{_NAME}\s*)*);", re.DOTALL
)


def render_alphabet(alphabet: Alphabet) -> str:
    return (
        f"sys: {' '.join(alphabet.sys_actions)}; "
        f"env: {' '.join(alphabet.env_actions)};"
    )


def _split_alphabet(text: str) -> tuple[Alphabet, str]:
    """Parse a leading alphabet declaration; return it and the remainder."""
    match = _DECL_RE.match(text)
    if not match:
        raise ParseError(
            "expected an alphabet declaration like 'sys: a b; env: c d;'"
        )
    try:
        alphabet = Alphabet(tuple(match.group(1).split()), tuple(match.group(2).split()))
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    return alphabet, text[match.end():]


def parse_alphabet(text: str) -> Alphabet:
    alphabet, rest = _split_alphabet(_strip_comments(text))
    if rest.strip():
        raise ParseError(f"unexpected text after alphabet declaration: {rest.strip()!r}")
    return alphabet


# ---------------------------------------------------------------------------
# Formula files


def parse_formula_file(text: str) -> tuple[Alphabet, Formula]:
    """An alphabet declaration followed by one sentence."""
    alphabet, rest = _split_alphabet(_strip_comments(text))
    if not rest.strip():
        raise ParseError("expected a formula after the alphabet declaration")
    return alphabet, parse_formula(rest, alphabet)


def render_formula_file(alphabet: Alphabet, phi: Formula) -> str:
    return f"{render_alphabet(alphabet)}\n{format_formula(phi)}\n"


# ---------------------------------------------------------------------------
# Execution files


_PROCS_RE = re.compile(
    r"^\s*procs((?:\s+(?:sys|env|both)\s*=\s*[0-9,\s]*)*)\s*;", re.DOTALL
)
_GROUP_RE = re.compile(r"(sys|env|both)\s*=\s*((?:\s*[0-9]+\s*(?:,\s*[0-9]+\s*)*)?)")
_EVENT_RE = re.compile(rf"\(\s*({_NAME})\s*,\s*([0-9]+)\s*\)")


def parse_execution_file(text: str) -> Execution:
    """Alphabet declaration, process declaration, then the event sequence."""
    alphabet, rest = _split_alphabet(_strip_comments(text))
    match = _PROCS_RE.match(rest)
    if not match:
        raise ParseError(
            "expected a process declaration like 'procs sys=1,2 env=3 both=;'"
        )
    groups = {"sys": (), "env": (), "both": ()}
    seen = set()
    for kind, ids in _GROUP_RE.findall(match.group(1)):
        if kind in seen:
            raise ParseError(f"duplicate process group {kind!r}")
        seen.add(kind)
        groups[kind] = tuple(int(p) for p in ids.replace(",", " ").split())
    rest = rest[match.end():]
    events = []
    pos = 0
    rest_stripped = rest.strip()
    while pos < len(rest_stripped):
        match = _EVENT_RE.match(rest_stripped, pos)
        if not match:
            raise ParseError(f"bad event at {rest_stripped[pos:pos + 20]!r}")
        events.append(Event(match.group(1), int(match.group(2))))
        pos = match.end()
        while pos < len(rest_stripped) and rest_stripped[pos].isspace():
            pos += 1
    try:
        universe = ProcessUniverse(groups["sys"], groups["env"], groups["both"])
        return Execution(alphabet, universe, tuple(events))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def render_execution_file(x: Execution) -> str:
    u = x.universe
    procs = (
        f"procs sys={','.join(map(str, u.sys_procs))}"
        f" env={','.join(map(str, u.env_procs))}"
        f" both={','.join(map(str, u.both_procs))};"
    )
    events = "".join(f"({e.action},{e.process})" for e in x.events)
    return f"{render_alphabet(x.alphabet)}\n{procs}\n{events}\n"


# ---------------------------------------------------------------------------
# Locations, conditions, configurations


def location_to_json(loc: Location, alphabet: Alphabet) -> dict:
    return {a: n for a, n in zip(alphabet.actions, loc) if n}


def location_from_json(data: Any, alphabet: Alphabet) -> Location:
    data = _expect_dict(data, "location")
    for letter in data:
        if letter not in alphabet.actions:
            raise ParseError(f"unknown letter {letter!r} in location")
    return tuple(
        _expect_nat(data.get(a, 0), f"count of {a!r}") for a in alphabet.actions
    )


def condition_to_json(cond: LocalCondition) -> list[str]:
    return list(cond.render())


def condition_from_json(data: Any) -> LocalCondition:
    parts = _expect_list(data, "condition")
    if len(parts) != 3 or not all(isinstance(p, str) for p in parts):
        raise ParseError(f"condition must be three strings like '=0', got {data!r}")
    try:
        return LocalCondition.of(*parts)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def config_to_json(config: Configuration) -> dict:
    tokens = []
    for loc, triple in config.tokens:
        entry: dict[str, Any] = {"loc": location_to_json(loc, config.alphabet)}
        entry.update(zip(TYPE_ORDER, triple))
        tokens.append(entry)
    return {"B": config.bound, "tokens": tokens}


def config_from_json(data: Any, alphabet: Alphabet) -> Configuration:
    data = _expect_dict(data, "configuration")
    bound = _expect_nat(data.get("B"), "configuration bound B")
    tokens: dict[Location, tuple[int, int, int]] = {}
    for entry in _expect_list(data.get("tokens", []), "tokens"):
        entry = _expect_dict(entry, "token entry")
        loc = location_from_json(entry.get("loc", {}), alphabet)
        triple = tuple(
            _expect_nat(entry.get(t, 0), f"{t!r} token count") for t in TYPE_ORDER
        )
        if loc in tokens:
            raise ParseError(f"duplicate location in configuration: {entry['loc']!r}")
        tokens[loc] = triple
    try:
        return Configuration.of(alphabet, bound, tokens)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


# ---------------------------------------------------------------------------
# Games


def _row_to_json(row: AcceptanceRow, alphabet: Alphabet) -> dict:
    if isinstance(row, PredicateRow):
        return {
            "kind": "predicate",
            "family": row.family,
            "cond": condition_to_json(row.cond),
            "default": condition_to_json(row.default),
        }
    return {
        "default": condition_to_json(row.default),
        "locs": [
            {"loc": location_to_json(loc, alphabet), "cond": condition_to_json(cond)}
            for loc, cond in row.explicit
        ],
    }


def game_to_json(game: Game) -> dict:
    doc: dict[str, Any] = {
        "sys": list(game.alphabet.sys_actions),
        "env": list(game.alphabet.env_actions),
        "B": game.bound,
    }
    acc = game.acceptance
    if isinstance(acc, FormulaAcceptance):
        doc["acceptance"] = {"kind": "formula", "text": format_formula(acc.phi)}
    else:
        doc["acceptance"] = {
            "kind": "explicit",
            "rows": [_row_to_json(row, game.alphabet) for row in acc.rows],
        }
    return doc


def _row_from_json(data: Any, alphabet: Alphabet) -> AcceptanceRow:
    data = _expect_dict(data, "acceptance row")
    kind = data.get("kind", "row")
    if kind == "predicate":
        family = data.get("family")
        if family not in LOCATION_PREDICATES:
            raise ParseError(
                f"unknown predicate family {family!r}; "
                f"known: {sorted(LOCATION_PREDICATES)}"
            )
        return PredicateRow(
            family,
            condition_from_json(data.get("cond")),
            condition_from_json(data.get("default", [">=0", ">=0", ">=0"])),
        )
    if kind != "row":
        raise ParseError(f"unknown row kind {kind!r}")
    explicit = {}
    for entry in _expect_list(data.get("locs", []), "row locations"):
        entry = _expect_dict(entry, "row location entry")
        loc = location_from_json(entry.get("loc", {}), alphabet)
        if loc in explicit:
            raise ParseError(f"row constrains the same location twice: {entry['loc']!r}")
        explicit[loc] = condition_from_json(entry.get("cond"))
    try:
        return Row.of(explicit, default=condition_from_json(data.get("default", ["=0", "=0", "=0"])))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def game_from_json(data: Any) -> Game:
    data = _expect_dict(data, "game")
    sys_actions = _expect_list(data.get("sys"), "'sys' letters")
    env_actions = _expect_list(data.get("env"), "'env' letters")
    try:
        alphabet = Alphabet(tuple(sys_actions), tuple(env_actions))
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
    bound = _expect_nat(data.get("B"), "game bound B")
    acc_data = _expect_dict(data.get("acceptance"), "acceptance")
    kind = acc_data.get("kind")
    if kind == "formula":
        text = acc_data.get("text")
        if not isinstance(text, str):
            raise ParseError("formula acceptance needs a 'text' string")
        phi = parse_formula(text, alphabet)
        acceptance: Any = FormulaAcceptance(phi)
    elif kind == "explicit":
        rows = tuple(
            _row_from_json(row, alphabet)
            for row in _expect_list(acc_data.get("rows"), "acceptance rows")
        )
        if not rows:
            raise ParseError("explicit acceptance needs at least one row")
        acceptance = ExplicitAcceptance(rows)
    else:
        raise ParseError(f"unknown acceptance kind {kind!r}")
    try:
        return Game(alphabet, bound, acceptance)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


# ---------------------------------------------------------------------------
# Normal forms


def nf_to_json(nf: NormalForm) -> dict:
    return {
        "sys": list(nf.alphabet.sys_actions),
        "env": list(nf.alphabet.env_actions),
        "B": nf.bound,
        "clauses": [
            [
                {
                    "type": c.ptype,
                    "loc": location_to_json(c.loc, nf.alphabet),
                    "cmp": c.cmp,
                    "m": c.m,
                }
                for c in clause
            ]
            for clause in nf.clauses
        ],
    }


def nf_from_json(data: Any) -> NormalForm:
    data = _expect_dict(data, "normal form")
    try:
        alphabet = Alphabet(
            tuple(_expect_list(data.get("sys"), "'sys' letters")),
            tuple(_expect_list(data.get("env"), "'env' letters")),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
    bound = _expect_nat(data.get("B"), "normal form bound B")
    clauses = []
    for clause_data in _expect_list(data.get("clauses"), "clauses"):
        clause = []
        for c in _expect_list(clause_data, "clause"):
            c = _expect_dict(c, "constraint")
            if c.get("type") not in TYPE_ORDER:
                raise ParseError(f"bad process type {c.get('type')!r}")
            if c.get("cmp") not in ("=", ">="):
                raise ParseError(f"bad comparison {c.get('cmp')!r}")
            clause.append(
                CountConstraint(
                    c["cmp"],
                    _expect_nat(c.get("m"), "constraint count"),
                    c["type"],
                    location_from_json(c.get("loc", {}), alphabet),
                )
            )
        clauses.append(tuple(clause))
    return NormalForm(alphabet, bound, tuple(clauses))


# ---------------------------------------------------------------------------
# Transitions, plays, strategies


def transition_to_json(tau: Transition, alphabet: Alphabet) -> dict:
    moves = []
    for (src, dst), triple in tau.moves:
        for ptype, count in zip(TYPE_ORDER, triple):
            if count:
                moves.append(
                    {
                        "from": location_to_json(src, alphabet),
                        "to": location_to_json(dst, alphabet),
                        "count": count,
                        "type": ptype,
                    }
                )
    return {"side": tau.side, "moves": moves}


def transition_from_json(data: Any, alphabet: Alphabet) -> Transition:
    data = _expect_dict(data, "transition")
    side = data.get("side")
    if side not in (SYSTEM, ENVIRONMENT):
        raise ParseError(f"transition side must be System or Environment, got {side!r}")
    moves: dict[tuple[Location, Location], list[int]] = {}
    for entry in _expect_list(data.get("moves", []), "moves"):
        entry = _expect_dict(entry, "move record")
        src = location_from_json(entry.get("from", {}), alphabet)
        dst = location_from_json(entry.get("to", {}), alphabet)
        ptype = entry.get("type")
        if ptype not in TYPE_ORDER:
            raise ParseError(f"bad token type {ptype!r}")
        count = _expect_nat(entry.get("count"), "move count")
        triple = moves.setdefault((src, dst), [0, 0, 0])
        triple[TYPE_ORDER.index(ptype)] += count
    try:
        return Transition.of(side, {pair: tuple(t) for pair, t in moves.items()})
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def play_to_json(play: Play) -> dict:
    alphabet = play.initial.alphabet
    return {
        "B": play.initial.bound,
        "sys": list(alphabet.sys_actions),
        "env": list(alphabet.env_actions),
        "initial": config_to_json(play.initial)["tokens"],
        "steps": [transition_to_json(tau, alphabet) for tau, _ in play.steps],
    }


def play_from_json(data: Any) -> Play:
    data = _expect_dict(data, "play")
    try:
        alphabet = Alphabet(
            tuple(_expect_list(data.get("sys"), "'sys' letters")),
            tuple(_expect_list(data.get("env"), "'env' letters")),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
    config = config_from_json(
        {"B": data.get("B"), "tokens": data.get("initial", [])}, alphabet
    )
    play = Play(config)
    for step in _expect_list(data.get("steps", []), "steps"):
        tau = transition_from_json(step, alphabet)
        if tau.is_pass:
            play = play.extended(tau, play.final)
            continue
        try:
            play = play.extended(tau, apply(tau, play.final))
        except ValueError as exc:
            raise ParseError(f"inapplicable step in play: {exc}") from None
    return play


def strategy_to_json(strategy: PositionalStrategy, alphabet: Alphabet) -> dict:
    entries = []
    for config in sorted(strategy.moves, key=lambda c: c.tokens):
        entries.append(
            {
                "config": config_to_json(config)["tokens"],
                "move": transition_to_json(strategy.moves[config], alphabet),
            }
        )
    first = next(iter(strategy.moves), None)
    bound = first.bound if first is not None else 0
    return {
        "B": bound,
        "sys": list(alphabet.sys_actions),
        "env": list(alphabet.env_actions),
        "entries": entries,
    }


def strategy_from_json(data: Any) -> tuple[PositionalStrategy, Alphabet]:
    data = _expect_dict(data, "strategy")
    try:
        alphabet = Alphabet(
            tuple(_expect_list(data.get("sys"), "'sys' letters")),
            tuple(_expect_list(data.get("env"), "'env' letters")),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
    bound = _expect_nat(data.get("B"), "strategy bound B")
    moves = {}
    for entry in _expect_list(data.get("entries", []), "strategy entries"):
        entry = _expect_dict(entry, "strategy entry")
        config = config_from_json(
            {"B": bound, "tokens": entry.get("config", [])}, alphabet
        )
        if config in moves:
            raise ParseError("strategy defines the same configuration twice")
        moves[config] = transition_from_json(entry.get("move"), alphabet)
    return PositionalStrategy(moves), alphabet


# ---------------------------------------------------------------------------
# Counter machines


_TCM_CLAUSE_RE = re.compile(
    rf"^\s*({_NAME})\s*:\s*({_NAME})\s*--\s*(c[12])(\+\+|--|==0)\s*-->\s*({_NAME})\s*$"
)
_TCM_OPS = {"++": "inc", "--": "dec", "==0": "zero"}


def parse_tcm(text: str) -> TwoCounterMachine:
    """Parse the counter-machine text format.

    Three header clauses (states, init, halt), then one clause per
    transition: `name: source --c1++--> target;` with operations
    c1++/c1--/c1==0 and likewise for c2.
    """
    clauses = [c.strip() for c in _strip_comments(text).split(";")]
    if clauses and not clauses[-1]:
        clauses.pop()
    if len(clauses) < 3:
        raise ParseError("expected 'states', 'init' and 'halt' clauses")
    header = {}
    for expected, clause in zip(("states", "init", "halt"), clauses):
        parts = clause.split()
        if not parts or parts[0] != expected:
            raise ParseError(f"expected a {expected!r} clause, got {clause!r}")
        header[expected] = parts[1:]
    if len(header["init"]) != 1 or len(header["halt"]) != 1:
        raise ParseError("'init' and 'halt' each name exactly one state")
    transitions = []
    for clause in clauses[3:]:
        match = _TCM_CLAUSE_RE.match(clause)
        if not match:
            raise ParseError(f"bad transition clause {clause!r}")
        name, source, counter, op, target = match.groups()
        transitions.append(
            TcmTransition(name, source, _TCM_OPS[op], int(counter[1]), target)
        )
    try:
        return TwoCounterMachine(
            tuple(header["states"]),
            header["init"][0],
            header["halt"][0],
            tuple(transitions),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def render_tcm(machine: TwoCounterMachine) -> str:
    lines = [
        f"states {' '.join(machine.states)}; init {machine.init}; halt {machine.halt};"
    ]
    lines.extend(
        f"{t.name}: {t.source} --{t.op}--> {t.target};" for t in machine.transitions
    )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Result payloads (one-way: these are outputs)


def verdict_to_json(verdict: Verdict) -> dict:
    return {"winner": verdict.winner, "explored": verdict.explored}


def verify_to_json(result: VerifyResult) -> dict:
    doc: dict[str, Any] = {"ok": result.ok}
    if result.reason is not None:
        doc["reason"] = result.reason
    if result.counterexample is not None:
        doc["counterexample"] = play_to_json(result.counterexample)
    return doc


def _bound_to_json(bound: CutoffBound) -> dict:
    return {"K": bound.K, "Max": bound.Max, "hatN": bound.hatN}


def decision_to_json(decision: Decision) -> dict:
    doc = _bound_to_json(decision.bound)
    doc["witness"] = decision.witness if decision.kind == "nonempty" else decision.kind
    if decision.kind == "empty_up_to":
        doc["n_max"] = decision.n_max
    doc["instances_solved"] = decision.instances_solved
    return doc


def scan_to_json(scan: ScanResult) -> dict:
    return {
        "axis": scan.axis,
        "fixed": list(scan.fixed),
        "values": list(scan.values),
        "winners": list(scan.winners),
        "constant_from": scan.constant_from,
        "stabilizes": scan.stabilizes,
    }
