"""End-to-end tests of the command-line interface, run in process."""

import hashlib
import json
from collections import Counter
from pathlib import Path

import pytest

from conftest import PHI1, PHI2, PHI3, PHI4, make_reference_execution
from pvg import (
    ANY,
    Alphabet,
    ExplicitAcceptance,
    Game,
    LocalCondition,
    Row,
    decide,
    example5_game,
    formula_to_game,
    lemma4_game,
    lemma5_game,
    model_check,
    normalize,
    __version__,
)
from pvg.cli import EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK, EXIT_REFUSED, main
from pvg.formats import (
    config_to_json,
    decision_to_json,
    dumps,
    game_from_json,
    game_to_json,
    nf_to_json,
    parse_execution_file,
    parse_formula_file,
    render_execution_file,
)

REFERENCE_HEADER = "sys: a b; env: c d;"
AD_HEADER = "sys: a; env: d;"
PHI2_AD = "A x. (d(x) -> E y. (x ~ y & a(y)))"
NORMALIZED_EXECUTION = f"{AD_HEADER}\nprocs sys= env= both=1,2;\n(d,2)(d,2)(a,2)(a,2)\n"
ZERO_TEST_MACHINE = "states q0 qh;\ninit q0;\nhalt qh;\nt1: q0 --c1==0--> qh;\n"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def files(tmp_path):
    def write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write


@pytest.fixture()
def reference_files(files):
    formula = files("phi2.pvg", f"{REFERENCE_HEADER}\n{PHI2}\n")
    execution = files("w.pvg", render_execution_file(make_reference_execution()))
    return formula, execution


# ---------------------------------------------------------------------------
# Global behaviour


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == f"pvg {__version__}"


def test_a_subcommand_is_required():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_quiet_accepted_before_and_after_the_subcommand(reference_files, capsys):
    formula, execution = reference_files
    for argv in (
        ("--quiet", "check", formula, execution),
        ("check", "--quiet", formula, execution),
    ):
        code, out, err = run(capsys, *argv)
        assert code == EXIT_OK
        assert out == "true\n"
        assert err == ""


def test_report_envelope_shape_and_input_digests(reference_files, capsys):
    formula, execution = reference_files
    code, out, _ = run(capsys, "check", formula, execution)
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["command"] == "check"
    assert report["version"] == __version__
    assert report["result"] == {"value": True}
    assert isinstance(report["timing_ms"], (int, float))
    assert set(report) == {"command", "version", "inputs", "result", "timing_ms"}
    for path in (formula, execution):
        digest = hashlib.sha256(Path(path).read_bytes()).hexdigest()
        assert report["inputs"][path] == digest


def test_reports_are_identical_except_for_timing(reference_files, capsys):
    formula, execution = reference_files
    reports = []
    for _ in range(2):
        _, out, _ = run(capsys, "check", formula, execution)
        report = json.loads(out)
        del report["timing_ms"]
        reports.append(report)
    assert reports[0] == reports[1]


# ---------------------------------------------------------------------------
# check


def test_check_false_still_exits_zero(files, reference_files, capsys):
    _, execution = reference_files
    formula = files("phi3.pvg", f"{REFERENCE_HEADER}\n{PHI3}\n")
    code, out, err = run(capsys, "check", "--quiet", formula, execution)
    assert code == EXIT_OK
    assert out == "false\n"
    assert err == ""


def test_check_rejects_mismatched_alphabets(files, reference_files, capsys):
    _, execution = reference_files
    formula = files("phi2-ad.pvg", f"{AD_HEADER}\n{PHI2_AD}\n")
    code, out, err = run(capsys, "check", formula, execution)
    assert code == EXIT_INPUT
    assert out == ""
    assert "different alphabets" in err


def test_missing_input_file(capsys, tmp_path):
    absent = str(tmp_path / "absent.pvg")
    code, out, err = run(capsys, "check", absent, absent)
    assert code == EXIT_INPUT
    assert "cannot read" in err


def test_malformed_formula_file(files, reference_files, capsys):
    _, execution = reference_files
    formula = files("broken.pvg", f"{REFERENCE_HEADER}\nA x. (d(x) ->\n")
    code, _, err = run(capsys, "check", formula, execution)
    assert code == EXIT_INPUT
    assert err != ""


# ---------------------------------------------------------------------------
# normalize / sat


def test_normalize_token_and_output_file(files, tmp_path, capsys):
    formula = files("phi4.pvg", f"{AD_HEADER}\n{PHI4}\n")
    out_path = str(tmp_path / "nf.json")
    code, out, _ = run(
        capsys, "normalize", "--quiet", formula, "--B", "3", "--mcap", "1", "-o", out_path
    )
    assert code == EXIT_OK
    assert out == "1 clauses\n"
    alphabet, phi = parse_formula_file(Path(formula).read_text())
    expected = nf_to_json(normalize(phi, alphabet, bound=3, m_cap=1))
    assert json.loads(Path(out_path).read_text()) == expected


def test_normalize_budget_refusal(files, capsys):
    formula = files("phi4.pvg", f"{REFERENCE_HEADER}\n{PHI4}\n")
    code, out, err = run(capsys, "normalize", formula, "--budget", "50")
    assert code == EXIT_REFUSED
    assert out == ""
    assert "refused" in err


def test_budget_environment_variable(files, capsys, monkeypatch):
    formula = files("phi4.pvg", f"{REFERENCE_HEADER}\n{PHI4}\n")
    monkeypatch.setenv("PVG_BUDGET", "50")
    code, _, _ = run(capsys, "normalize", formula)
    assert code == EXIT_REFUSED

    monkeypatch.setenv("PVG_BUDGET", "not-a-number")
    code, _, err = run(capsys, "normalize", formula)
    assert code == EXIT_INPUT
    assert "PVG_BUDGET" in err


def test_sat_produces_a_checkable_witness(files, tmp_path, capsys):
    formula = files("phi1.pvg", f"{REFERENCE_HEADER}\n{PHI1}\n")
    out_path = str(tmp_path / "witness.pvg")
    code, out, _ = run(capsys, "sat", "--quiet", formula, "-o", out_path)
    assert code == EXIT_OK
    assert out == "sat\n"
    witness = parse_execution_file(Path(out_path).read_text())
    _, phi = parse_formula_file(Path(formula).read_text())
    assert model_check(witness, phi)


def test_sat_reports_unsat_with_exit_zero(files, capsys):
    formula = files("contradiction.pvg", f"{REFERENCE_HEADER}\nE x. (a(x) & b(x))\n")
    code, out, _ = run(capsys, "sat", "--quiet", formula)
    assert code == EXIT_OK
    assert out == "unsat\n"


# ---------------------------------------------------------------------------
# compile / solve / invert


def test_compile_then_solve_both_winners(files, tmp_path, capsys):
    formula = files("phi2-ad.pvg", f"{AD_HEADER}\n{PHI2_AD}\n")
    game_path = str(tmp_path / "game.json")
    code, out, _ = run(capsys, "compile", "--quiet", formula, "-o", game_path)
    assert code == EXIT_OK
    assert out == "compiled\n"
    game = game_from_json(json.loads(Path(game_path).read_text()))
    assert game.alphabet == Alphabet(("a",), ("d",))

    code, out, _ = run(capsys, "solve", "--quiet", game_path, "--ks", "1")
    assert (code, out) == (EXIT_OK, "System\n")
    code, out, _ = run(capsys, "solve", "--quiet", game_path, "--ke", "1")
    assert (code, out) == (EXIT_OK, "Environment\n")


def test_solve_budget_is_reported_inconclusive(files, capsys):
    game_path = files("example5.json", dumps(game_to_json(example5_game())))
    code, out, _ = run(
        capsys, "solve", game_path, "--kse", "6", "--budget", "3"
    )
    assert code == EXIT_INCONCLUSIVE
    report = json.loads(out)
    assert report["result"]["winner"] == "inconclusive"
    assert "reason" in report["result"]


def test_solve_emits_a_strategy_that_verify_accepts(files, tmp_path, capsys):
    game_path = files("example5.json", dumps(game_to_json(example5_game())))
    strategy_path = str(tmp_path / "strategy.json")
    code, out, _ = run(
        capsys, "solve", game_path, "--kse", "4", "--emit-strategy", strategy_path
    )
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["result"]["winner"] == "System"
    assert report["result"]["strategy"] == strategy_path

    code, out, _ = run(capsys, "verify", "--quiet", game_path, strategy_path, "--kse", "4")
    assert (code, out) == (EXIT_OK, "true\n")


def test_solve_accepts_a_config_file(files, capsys):
    game_path = files("lemma5.json", dumps(game_to_json(lemma5_game())))
    config = lemma5_game().initial(2, 1, 0)
    config_path = files("config.json", dumps(config_to_json(config)))
    code, out, _ = run(capsys, "solve", "--quiet", game_path, "--config", config_path)
    assert (code, out) == (EXIT_OK, "System\n")

    code, _, err = run(capsys, "solve", game_path, "--config", config_path, "--ks", "1")
    assert code == EXIT_INPUT
    assert "not both" in err


def test_capped_solve_is_labeled(files, capsys):
    game_path = files("lemma5.json", dumps(game_to_json(lemma5_game())))
    code, out, _ = run(capsys, "solve", game_path, "--ks", "1", "--caps-tokens", "1")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["result"]["semantics"] == "capped"
    assert report["result"]["winner"] in ("System", "Environment")


def test_invert_round_trips_through_check(files, tmp_path, capsys):
    formula = files("phi2-ad.pvg", f"{AD_HEADER}\n{PHI2_AD}\n")
    game_path = str(tmp_path / "explicit.json")
    code, _, _ = run(capsys, "compile", "--quiet", formula, "--explicit", "-o", game_path)
    assert code == EXIT_OK

    code, out, _ = run(capsys, "invert", game_path)
    assert code == EXIT_OK
    recovered = files("recovered.pvg", json.loads(out)["result"]["formula"])

    executions = (
        files("sat.pvg", f"{AD_HEADER}\nprocs sys= env= both=1;\n(d,1)(a,1)\n"),
        files("unsat.pvg", f"{AD_HEADER}\nprocs sys= env= both=1,2;\n(d,1)(a,1)(d,2)\n"),
    )
    for execution in executions:
        _, original, _ = run(capsys, "check", "--quiet", formula, execution)
        _, inverted, _ = run(capsys, "check", "--quiet", recovered, execution)
        assert original == inverted
    assert original == "false\n"  # the second execution violates the sentence


def test_invert_requires_explicit_rows(files, tmp_path, capsys):
    formula = files("phi2-ad.pvg", f"{AD_HEADER}\n{PHI2_AD}\n")
    game_path = str(tmp_path / "semantic.json")
    run(capsys, "compile", "--quiet", formula, "-o", game_path)
    code, _, err = run(capsys, "invert", game_path)
    assert code == EXIT_INPUT
    assert "explicit" in err


# ---------------------------------------------------------------------------
# decide / scan


def test_decide_on_a_formula_file_matches_the_library(files, capsys):
    formula = files("phi2-ad.pvg", f"{AD_HEADER}\n{PHI2_AD}\n")
    code, out, _ = run(capsys, "decide", formula, "--ke", "0", "--kse", "0")
    assert code == EXIT_OK
    report = json.loads(out)

    alphabet, phi = parse_formula_file(Path(formula).read_text())
    game = formula_to_game(phi, alphabet, explicit=True)
    expected = decision_to_json(decide(game, 0, 0))
    assert report["result"] == expected


def test_decide_on_a_game_file(files, capsys):
    game_path = files("lemma5.json", dumps(game_to_json(lemma5_game())))
    code, out, _ = run(capsys, "decide", "--quiet", game_path, "--ke", "1", "--kse", "0")
    assert (code, out) == (EXIT_OK, "nonempty\n")


def test_decide_empty(files, capsys):
    # acceptance needs an environment token, but k_e is fixed at zero
    alphabet = Alphabet(("a",), ("b",))
    row = Row.of({(0, 1): LocalCondition.of(">=0", ">=1", ">=0")}, default=ANY)
    game = Game(alphabet, 1, ExplicitAcceptance((row,)))
    game_path = files("env-needed.json", dumps(game_to_json(game)))
    code, out, _ = run(capsys, "decide", "--quiet", game_path, "--ke", "0", "--kse", "0")
    assert (code, out) == (EXIT_OK, "empty\n")


def test_decide_budget_is_inconclusive_exit(files, capsys):
    game_path = files("example5.json", dumps(game_to_json(example5_game())))
    code, out, _ = run(
        capsys, "decide", "--quiet", game_path, "--ke", "0", "--kse", "6", "--budget", "3"
    )
    assert (code, out) == (EXIT_INCONCLUSIVE, "inconclusive\n")


def test_scan_winner_token(files, capsys):
    game_path = files("lemma4.json", dumps(game_to_json(lemma4_game())))
    code, out, _ = run(capsys, "scan", "--quiet", game_path, "se", "0..8")
    assert (code, out) == (EXIT_OK, "EESESESES\n")


def test_scan_rejects_bad_ranges_and_fixed(files, capsys):
    game_path = files("lemma4.json", dumps(game_to_json(lemma4_game())))
    code, _, err = run(capsys, "scan", game_path, "se", "8..2")
    assert code == EXIT_INPUT
    assert "bad range" in err

    code, _, err = run(capsys, "scan", game_path, "se", "0..2", "--fixed", "1")
    assert code == EXIT_INPUT
    assert "--fixed" in err


# ---------------------------------------------------------------------------
# simulate


def _per_type_loads(w):
    u = w.universe

    def load(p):
        return frozenset(Counter(e.action for e in w.events if e.process == p).items())

    groups = (("sys", u.sys_procs), ("env", u.env_procs), ("both", u.both_procs))
    return {kind: Counter(load(p) for p in procs) for kind, procs in groups}


def test_simulate_round_trips(files, tmp_path, capsys):
    game_path = files("example5.json", dumps(game_to_json(example5_game())))
    execution = files("w.pvg", NORMALIZED_EXECUTION)
    play_path = str(tmp_path / "play.json")
    code, out, _ = run(
        capsys, "simulate", "--quiet", game_path, "--execution", execution, "-o", play_path
    )
    assert (code, out) == (EXIT_OK, "ok\n")

    exec2_path = str(tmp_path / "w2.pvg")
    code, out, _ = run(
        capsys, "simulate", "--quiet", game_path, "--play", play_path, "-o", exec2_path
    )
    assert (code, out) == (EXIT_OK, "ok\n")
    original = parse_execution_file(Path(execution).read_text())
    recovered = parse_execution_file(Path(exec2_path).read_text())
    assert _per_type_loads(original) == _per_type_loads(recovered)

    # translating the recovered execution gives back the identical play
    play2_path = str(tmp_path / "play2.json")
    code, _, _ = run(
        capsys, "simulate", "--quiet", game_path, "--execution", exec2_path, "-o", play2_path
    )
    assert code == EXIT_OK
    assert json.loads(Path(play_path).read_text()) == json.loads(Path(play2_path).read_text())


def test_simulate_requires_exactly_one_direction(files, capsys):
    game_path = files("example5.json", dumps(game_to_json(example5_game())))
    execution = files("w.pvg", NORMALIZED_EXECUTION)
    code, _, err = run(capsys, "simulate", game_path)
    assert code == EXIT_INPUT
    assert "exactly one" in err

    code, _, err = run(
        capsys, "simulate", game_path, "--execution", execution, "--play", execution
    )
    assert code == EXIT_INPUT
    assert "exactly one" in err


def test_simulate_rejects_mismatched_alphabets(files, capsys):
    alphabet = Alphabet(("u",), ("v",))
    row = Row.of({(1, 0): LocalCondition.of(">=1", ">=0", ">=0")}, default=ANY)
    game = Game(alphabet, 1, ExplicitAcceptance((row,)))
    game_path = files("uv.json", dumps(game_to_json(game)))
    execution = files("w.pvg", NORMALIZED_EXECUTION)
    code, _, err = run(capsys, "simulate", game_path, "--execution", execution)
    assert code == EXIT_INPUT
    assert "different alphabets" in err


# ---------------------------------------------------------------------------
# encode-2cm / verify


def test_encode_2cm_then_verify_tcm_strategy(files, tmp_path, capsys):
    machine = files("machine.tcm", ZERO_TEST_MACHINE)
    game_path = str(tmp_path / "tcm-game.json")
    code, out, _ = run(capsys, "encode-2cm", "--quiet", machine, "-o", game_path)
    assert (code, out) == (EXIT_OK, "encoded\n")
    game = game_from_json(json.loads(Path(game_path).read_text()))
    assert game.bound == 4
    assert len(game.acceptance.rows) == 13

    code, out, _ = run(capsys, "verify", "--quiet", game_path, f"tcm:{machine}", "--kse", "4")
    assert (code, out) == (EXIT_OK, "true\n")
    # an explicit step bound after the machine path
    code, out, _ = run(capsys, "verify", "--quiet", game_path, f"tcm:{machine}:8", "--kse", "4")
    assert (code, out) == (EXIT_OK, "true\n")


def test_verify_library_strategy_true_and_false(files, capsys):
    game_path = files("example5.json", dumps(game_to_json(example5_game())))
    code, out, _ = run(capsys, "verify", "--quiet", game_path, "example5_strategy", "--kse", "6")
    assert (code, out) == (EXIT_OK, "true\n")

    code, out, _ = run(capsys, "verify", game_path, "example5_strategy", "--ke", "1")
    assert code == EXIT_OK
    report = json.loads(out)
    assert report["result"]["ok"] is False


def test_verify_unknown_strategy_name(files, capsys):
    game_path = files("example5.json", dumps(game_to_json(example5_game())))
    code, _, err = run(capsys, "verify", game_path, "no_such_strategy", "--kse", "1")
    assert code == EXIT_INPUT
    assert "unknown strategy" in err
