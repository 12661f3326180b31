"""Text and JSON codecs round-trip every format the tool reads or writes."""

import json

import pytest

from pvg import (
    ANY,
    Alphabet,
    Configuration,
    ENVIRONMENT,
    Execution,
    ExplicitAcceptance,
    FormulaAcceptance,
    Game,
    LocalCondition,
    ParseError,
    Play,
    PositionalStrategy,
    PredicateRow,
    ProcessUniverse,
    Row,
    SYSTEM,
    Transition,
    Verdict,
    VerifyResult,
    apply,
    cutoff_bound,
    decide,
    example5_game,
    format_formula,
    normalize,
    parse_formula,
    scan_winning,
    solve,
    lemma5_game,
)
from pvg.formats import (
    condition_from_json,
    condition_to_json,
    config_from_json,
    config_to_json,
    decision_to_json,
    dumps,
    game_from_json,
    game_to_json,
    location_from_json,
    location_to_json,
    nf_from_json,
    nf_to_json,
    parse_alphabet,
    parse_execution_file,
    parse_formula_file,
    parse_tcm,
    play_from_json,
    play_to_json,
    render_alphabet,
    render_execution_file,
    render_formula_file,
    render_tcm,
    scan_to_json,
    strategy_from_json,
    strategy_to_json,
    transition_from_json,
    transition_to_json,
    verdict_to_json,
    verify_to_json,
    write_text_atomic,
)

from conftest import PHI4, make_reference_execution

# ---------------------------------------------------------------------------
# JSON envelope conventions


def test_dumps_is_stable_and_newline_terminated():
    text = dumps({"b": 1, "a": [1, 2]})
    assert text.endswith("\n")
    # insertion order is preserved, not sorted
    assert text.index('"b"') < text.index('"a"')
    assert json.loads(text) == {"b": 1, "a": [1, 2]}


def test_write_text_atomic(tmp_path):
    target = tmp_path / "out" / "file.txt"
    target.parent.mkdir()
    write_text_atomic(str(target), "hello\n")
    assert target.read_text() == "hello\n"
    # overwrite works and leaves no temp files behind
    write_text_atomic(str(target), "bye\n")
    assert target.read_text() == "bye\n"
    assert [p.name for p in target.parent.iterdir()] == ["file.txt"]


# ---------------------------------------------------------------------------
# Alphabets, formulas, executions (text formats)


def test_alphabet_round_trip(ab_cd):
    assert parse_alphabet(render_alphabet(ab_cd)) == ab_cd
    assert parse_alphabet("sys: a b; env: c d;") == ab_cd
    assert parse_alphabet("sys: a; env: ;") == Alphabet(("a",), ())
    with pytest.raises(ParseError):
        parse_alphabet("sys a b")


def test_formula_file_round_trip(ab_cd):
    phi = parse_formula(PHI4, ab_cd)
    text = render_formula_file(ab_cd, phi)
    alphabet2, phi2 = parse_formula_file(text)
    assert alphabet2 == ab_cd and phi2 == phi


def test_formula_file_comments(ab_cd):
    text = "# a comment\nsys: a b; env: c d;\n# another\ntrue\n"
    alphabet, phi = parse_formula_file(text)
    assert alphabet == ab_cd
    assert format_formula(phi) == "true"


def test_execution_file_round_trip():
    w = make_reference_execution()
    text = render_execution_file(w)
    assert parse_execution_file(text) == w


def test_execution_file_explicit():
    text = (
        "sys: a; env: d;\n"
        "procs sys= env= both=1,2;\n"
        "(d,2)(d,2)(a,2)(a,2)\n"
    )
    w = parse_execution_file(text)
    assert w.universe.both_procs == (1, 2)
    assert len(w) == 4
    assert parse_execution_file(render_execution_file(w)) == w


def test_execution_file_rejects_type_violation():
    text = "sys: a; env: d;\nprocs sys=1 env= both=;\n(d,1)\n"
    with pytest.raises(Exception):
        parse_execution_file(text)


# ---------------------------------------------------------------------------
# Locations, conditions, configurations


def test_location_round_trip(ab_cd):
    loc = (2, 0, 0, 2)
    data = location_to_json(loc, ab_cd)
    assert data == {"a": 2, "d": 2}  # zeros omitted
    assert location_from_json(data, ab_cd) == loc


def test_condition_round_trip():
    cond = LocalCondition.of("=0", ">=2", ">=0")
    data = condition_to_json(cond)
    assert condition_from_json(data) == cond
    assert condition_from_json(["=0", "≥2", "≥0"]) == cond
    with pytest.raises(ParseError):
        condition_from_json(["=0", "=0"])


def test_config_round_trip(ad):
    config = Configuration.of(ad, 3, {(0, 0): (1, 2, 0), (2, 2): (0, 0, 3)})
    data = config_to_json(config)
    assert data["B"] == 3
    assert config_from_json(data, ad) == config


# ---------------------------------------------------------------------------
# Games


def test_game_round_trip_explicit():
    game = lemma5_game()
    data = game_to_json(game)
    back = game_from_json(data)
    assert back == game


def test_game_round_trip_predicate_rows():
    alphabet = Alphabet(("a",), ("b",))
    game = Game(
        alphabet,
        2,
        ExplicitAcceptance(
            (PredicateRow("sys_lt_env", LocalCondition.of("=0", "=0", ">=1"), default=ANY),)
        ),
    )
    assert game_from_json(game_to_json(game)) == game


def test_game_round_trip_formula_acceptance(ad):
    game = Game(ad, 3, FormulaAcceptance(parse_formula(PHI4, ad)))
    back = game_from_json(game_to_json(game))
    assert back.bound == game.bound and back.alphabet == game.alphabet
    assert back.acceptance.phi == game.acceptance.phi


def test_game_from_json_rejects_junk():
    with pytest.raises(ParseError):
        game_from_json({"sys": ["a"]})
    with pytest.raises(ParseError):
        game_from_json([1, 2, 3])


# ---------------------------------------------------------------------------
# Normal forms


def test_nf_round_trip(ad):
    nf = normalize(parse_formula(PHI4, ad), ad, bound=3, m_cap=1)
    back = nf_from_json(nf_to_json(nf))
    assert back == nf


# ---------------------------------------------------------------------------
# Transitions, plays, strategies


def test_transition_round_trip(ad):
    tau = Transition.of(SYSTEM, {((0, 0), (1, 0)): (1, 0, 2), ((0, 1), (1, 1)): (0, 0, 1)})
    assert transition_from_json(transition_to_json(tau, ad), ad) == tau
    pass_ = Transition.empty()
    assert transition_from_json(transition_to_json(pass_, ad), ad) == pass_


def test_play_round_trip(ad):
    game = example5_game()
    start = game.initial(0, 0, 2)
    tau_env = Transition.of(ENVIRONMENT, {((0, 0), (0, 2)): (0, 0, 1)})
    c2 = apply(tau_env, start)
    tau_sys = Transition.of(SYSTEM, {((0, 2), (2, 2)): (0, 0, 1)})
    c3 = apply(tau_sys, c2)
    play = Play(start, ((Transition.empty(), start), (tau_env, c2), (tau_sys, c3)))
    back = play_from_json(play_to_json(play))
    assert back == play


def test_strategy_round_trip():
    game = lemma5_game()
    initial = game.initial(2, 1, 0)
    verdict, strategy = solve(game, initial)
    assert strategy is not None
    back, alphabet = strategy_from_json(strategy_to_json(strategy, game.alphabet))
    assert alphabet == game.alphabet
    assert back.moves == strategy.moves


# ---------------------------------------------------------------------------
# Counter machine text format


def test_tcm_round_trip():
    text = (
        "states q0 q1 qh;\n"
        "init q0;\n"
        "halt qh;\n"
        "t1: q0 --c1++--> q1;\n"
        "t2: q1 --c1----> qh;\n"
    )
    machine = parse_tcm(text)
    assert machine.init == "q0" and machine.halt == "qh"
    assert [t.kind for t in machine.transitions] == ["inc", "dec"]
    assert parse_tcm(render_tcm(machine)) == machine


def test_tcm_zero_test_syntax():
    machine = parse_tcm("states q0 qh; init q0; halt qh;\nt1: q0 --c2==0--> qh;")
    assert machine.transitions[0].kind == "zero"
    assert machine.transitions[0].counter == 2
    assert parse_tcm(render_tcm(machine)) == machine


def test_tcm_parse_errors():
    with pytest.raises(ParseError):
        parse_tcm("states q0; init q0; halt q0;\nt1: q0 --c3++--> q0;")
    with pytest.raises(ParseError):
        parse_tcm("init q0; halt q0;")


# ---------------------------------------------------------------------------
# Result payloads


def test_verdict_and_verify_payloads():
    data = verdict_to_json(Verdict("System", 42))
    assert data == {"winner": "System", "explored": 42}
    ok = verify_to_json(VerifyResult(True))
    assert ok["ok"] is True and "counterexample" not in ok
    bad = verify_to_json(VerifyResult(False, None, "undefined somewhere"))
    assert bad["ok"] is False and bad["reason"] == "undefined somewhere"


def test_decision_and_scan_payloads():
    game = example5_game()
    d = decide(game, 0, 0)
    data = decision_to_json(d)
    assert data["witness"] == 0 and data["hatN"] == d.bound.hatN
    e = decide(game, 1, 0)
    assert decision_to_json(e)["witness"] == "empty"
    s = scan_winning(lemma5_game(), "s", (1, 0), range(0, 3))
    sdata = scan_to_json(s)
    assert sdata["winners"] == ["Environment", "System", "System"]
    assert sdata["axis"] == "s"
