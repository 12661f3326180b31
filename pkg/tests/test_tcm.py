"""Two-counter machines and their game encoding."""

import pytest

from pvg import (
    MoveCaps,
    TcmConfiguration,
    TcmTransition,
    TwoCounterMachine,
    WINNER_ENVIRONMENT,
    encode_2cm,
    solve,
    tcm_run_bounded,
    tcm_strategy,
    tcm_successors,
    verify_strategy,
)

# ---------------------------------------------------------------------------
# Machines


def zero_test_machine() -> TwoCounterMachine:
    return TwoCounterMachine(
        ("q0", "qh"), "q0", "qh", (TcmTransition("t1", "q0", "zero", 1, "qh"),)
    )


def inc_dec_machine() -> TwoCounterMachine:
    return TwoCounterMachine(
        ("q0", "q1", "qh"),
        "q0",
        "qh",
        (
            TcmTransition("t1", "q0", "inc", 1, "q1"),
            TcmTransition("t2", "q1", "dec", 1, "qh"),
        ),
    )


def stuck_machine() -> TwoCounterMachine:
    # the only transition decrements a counter that is always zero
    return TwoCounterMachine(
        ("q0", "qh"), "q0", "qh", (TcmTransition("t1", "q0", "dec", 1, "qh"),)
    )


def test_machine_validation():
    with pytest.raises(ValueError):
        TcmTransition("t1", "q0", "bump", 1, "qh")
    with pytest.raises(ValueError):
        TcmTransition("t1", "q0", "inc", 3, "qh")
    with pytest.raises(ValueError):
        TwoCounterMachine(("q0",), "q0", "qh", ())  # halt state unknown
    with pytest.raises(ValueError):
        # 'b' is reserved for the environment letter of the encoding
        TwoCounterMachine(("q0", "b"), "q0", "b", ())
    with pytest.raises(ValueError):
        TwoCounterMachine(
            ("q0", "qh"),
            "q0",
            "qh",
            (
                TcmTransition("t1", "q0", "inc", 1, "qh"),
                TcmTransition("t1", "q0", "inc", 2, "qh"),
            ),
        )


def test_successors():
    m = inc_dec_machine()
    start = TcmConfiguration("q0", 0, 0)
    succs = tcm_successors(m, start)
    assert len(succs) == 1
    t, gamma = succs[0]
    assert t.name == "t1" and gamma == TcmConfiguration("q1", 1, 0)
    # dec is disabled on zero
    assert tcm_successors(stuck_machine(), start) == []
    # zero-test is disabled on positive
    zt = zero_test_machine()
    assert tcm_successors(zt, TcmConfiguration("q0", 1, 0)) == []


def test_run_bounded():
    run = tcm_run_bounded(zero_test_machine(), 10)
    assert run is not None and len(run) == 1
    assert run[0][1] == TcmConfiguration("qh", 0, 0)

    run2 = tcm_run_bounded(inc_dec_machine(), 10)
    assert run2 is not None and len(run2) == 2
    assert run2[-1][1].state == "qh"

    assert tcm_run_bounded(stuck_machine(), 10) is None


# ---------------------------------------------------------------------------
# The encoding


def test_encoding_shape():
    game = encode_2cm(zero_test_machine())
    assert game.bound == 4
    assert game.alphabet.sys_actions == ("q0", "qh", "t1", "a1", "a2")
    assert game.alphabet.env_actions == ("b",)
    assert len(game.acceptance.rows) == 13


def test_encoding_row_count_scales_with_machine():
    game = encode_2cm(inc_dec_machine())
    # more states and transitions contribute more rows
    assert len(game.acceptance.rows) > 13


def test_simulation_strategy_zero_test():
    machine = zero_test_machine()
    run = tcm_run_bounded(machine, 10)
    strategy = tcm_strategy(machine, run)
    game = encode_2cm(machine)
    # one step needs 3*1 + 1 = 4 shared tokens; more tokens also win
    for k in (4, 5):
        result = verify_strategy(game, game.initial(0, 0, k), strategy)
        assert result.ok, (k, result.reason)
    # with too few tokens the strategy runs out of material
    assert not verify_strategy(game, game.initial(0, 0, 2), strategy).ok


def test_simulation_strategy_inc_dec():
    machine = inc_dec_machine()
    run = tcm_run_bounded(machine, 10)
    strategy = tcm_strategy(machine, run)
    game = encode_2cm(machine)
    # two steps need 3*2 + 1 = 7 shared tokens
    result = verify_strategy(game, game.initial(0, 0, 7), strategy)
    assert result.ok, result.reason


def test_stuck_machine_loses_under_caps():
    game = encode_2cm(stuck_machine())
    caps = MoveCaps(max_tokens_per_move=4, max_letters_per_token=1)
    verdict, strategy = solve(game, game.initial(0, 0, 3), caps=caps)
    assert verdict.winner == WINNER_ENVIRONMENT
    assert strategy is None
