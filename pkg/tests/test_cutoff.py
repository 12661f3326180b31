"""Cutoff bounds, the decision procedure, and winner scans."""

import pytest

from pvg import (
    ANY,
    Alphabet,
    ExplicitAcceptance,
    FormulaAcceptance,
    Game,
    LocalCondition,
    Row,
    SolveBudgetError,
    WINNER_ENVIRONMENT,
    WINNER_SYSTEM,
    cutoff_bound,
    decide,
    example5_game,
    lemma4_game,
    lemma5_game,
    parse_formula,
    scan_winning,
    solve,
)


def tiny_game() -> Game:
    # one system letter, one environment letter, bound 1; accepting iff
    # some token moved to the pure-a location
    alphabet = Alphabet(("a",), ("b",))
    row = Row.of({(1, 0): LocalCondition.of(">=1", ">=0", ">=0")}, default=ANY)
    return Game(alphabet, 1, ExplicitAcceptance((row,)))


# ---------------------------------------------------------------------------
# The bound itself


def test_cutoff_bound_reference_numbers():
    game = lemma4_game()
    b00 = cutoff_bound(game, 0, 0)
    assert (b00.K, b00.Max, b00.hatN) == (2, 0, 18)
    b01 = cutoff_bound(game, 0, 1)
    assert b01.Max == 2
    assert b01.hatN == 9**3 * 2 == 1458


def test_cutoff_bound_zero_constant():
    # acceptance without constants: hatN collapses to zero
    alphabet = Alphabet(("a",), ("b",))
    game = Game(alphabet, 1, ExplicitAcceptance((Row.of({}, default=ANY),)))
    assert cutoff_bound(game, 0, 0).hatN == 0


def test_cutoff_bound_tiny_game():
    bound = cutoff_bound(tiny_game(), 0, 0)
    assert bound.K == 1
    assert bound.hatN == 4
    assert bound.hatN <= 20


def test_cutoff_bound_formula_acceptance_needs_constant(ad):
    game = Game(ad, 1, FormulaAcceptance(parse_formula("true", ad)))
    with pytest.raises(ValueError):
        cutoff_bound(game, 0, 0)
    # an explicit constant unblocks the computation
    assert cutoff_bound(game, 0, 0, K=2).K == 2


# ---------------------------------------------------------------------------
# Winner constancy past the bound


def test_winner_constant_past_bound_tiny():
    game = tiny_game()
    bound = cutoff_bound(game, 0, 0)
    winners = {
        solve(game, game.initial(n, 0, 0))[0].winner
        for n in range(bound.hatN, bound.hatN + 4)
    }
    assert len(winners) == 1


# ---------------------------------------------------------------------------
# decide()


def test_decide_nonempty_with_witness():
    game = example5_game()
    decision = decide(game, 0, 0)
    assert decision.kind == "nonempty"
    assert decision.witness == 0
    assert decision.instances_solved == 1  # early exit on the first win


def test_decide_empty():
    game = example5_game()
    decision = decide(game, 1, 0)
    assert decision.kind == "empty"
    assert decision.witness is None
    assert decision.instances_solved == decision.bound.hatN + 1


def test_decide_lemma5():
    decision = decide(lemma5_game(), 0, 0)
    assert decision.kind == "nonempty" and decision.witness == 0


def test_decide_bounded_exploration():
    # the full bound here is 1458, far beyond the examined range
    game = lemma4_game()
    decision = decide(game, 0, 1, n_max=3)
    assert decision.bound.hatN == 1458
    assert decision.kind == "empty_up_to"
    assert decision.n_max == 3
    assert decision.instances_solved == 4


def test_decide_inconclusive_on_budget():
    game = example5_game()
    # six shared tokens make even the first instance exceed a 3-node budget
    decision = decide(game, 0, 6, node_budget=3)
    assert decision.kind == "inconclusive"


def test_decide_parallel_matches_serial():
    game = lemma5_game()
    serial = decide(game, 1, 0)
    parallel = decide(game, 1, 0, jobs=2)
    assert (serial.kind, serial.witness) == (parallel.kind, parallel.witness)


# ---------------------------------------------------------------------------
# scan_winning()


def test_scan_lemma4_se_axis_alternates():
    scan = scan_winning(lemma4_game(), "se", (0, 0), range(0, 9))
    assert scan.winners == (
        WINNER_ENVIRONMENT,
        WINNER_ENVIRONMENT,
        WINNER_SYSTEM,
        WINNER_ENVIRONMENT,
        WINNER_SYSTEM,
        WINNER_ENVIRONMENT,
        WINNER_SYSTEM,
        WINNER_ENVIRONMENT,
        WINNER_SYSTEM,
    )
    assert not scan.stabilizes


def test_scan_lemma5_s_axis_stabilizes():
    scan = scan_winning(lemma5_game(), "s", (2, 0), range(0, 5))
    assert scan.winners == (
        WINNER_ENVIRONMENT,
        WINNER_ENVIRONMENT,
        WINNER_SYSTEM,
        WINNER_SYSTEM,
        WINNER_SYSTEM,
    )
    assert scan.stabilizes and scan.constant_from == 2


def test_scan_axis_selection():
    # axis "e" fixes (k_s, k_se)
    scan = scan_winning(lemma5_game(), "e", (1, 0), range(0, 3))
    assert scan.winners == (WINNER_SYSTEM, WINNER_SYSTEM, WINNER_ENVIRONMENT)
    with pytest.raises(ValueError):
        scan_winning(lemma5_game(), "x", (0, 0), range(0, 2))


def test_scan_parallel_matches_serial():
    serial = scan_winning(lemma5_game(), "s", (1, 0), range(0, 4))
    parallel = scan_winning(lemma5_game(), "s", (1, 0), range(0, 4), jobs=2)
    assert serial.winners == parallel.winners


def test_scan_budget_error_propagates():
    with pytest.raises(SolveBudgetError):
        scan_winning(example5_game(), "se", (0, 0), range(5, 7), node_budget=3)
