"""Formula<->game compilation and play<->execution translation."""

import random
from collections import Counter

import pytest

from pvg import (
    ENVIRONMENT,
    Execution,
    ExplicitAcceptance,
    FormulaAcceptance,
    InvalidPlayError,
    Play,
    ProcessUniverse,
    SYSTEM,
    Transition,
    WINNER_ENVIRONMENT,
    WINNER_SYSTEM,
    abstract_execution,
    accepts,
    apply,
    bruteforce_synthesis,
    example5_game,
    example5_strategy,
    execution_to_play,
    formula_to_game,
    fragment_check,
    game_to_formula,
    iter_legal_moves,
    lemma4_game,
    lemma4_strategy,
    lemma5_game,
    lemma5_strategy,
    library_games,
    model_check,
    parse_formula,
    play_to_execution,
    solve,
    validate_play,
    verify_strategy,
)

from conftest import PHI2, PHI3, PHI4, phi4_hand_text, random_sentence

# ---------------------------------------------------------------------------
# Formula -> game


def test_formula_to_game_default_bound(ad):
    game = formula_to_game(parse_formula(PHI4, ad), ad)
    assert game.bound == 4  # the sentence's threshold
    game3 = formula_to_game(parse_formula(PHI4, ad), ad, bound=3)
    assert game3.bound == 3


def test_formula_to_game_rejects_ordered_sentences(ab_cd):
    with pytest.raises(Exception):
        formula_to_game(parse_formula(PHI3, ab_cd), ab_cd)


def test_formula_to_game_reference_winners(ad):
    phi = parse_formula(PHI2, ad)
    game = formula_to_game(phi, ad)
    assert solve(game, game.initial(1, 0, 0))[0].winner == WINNER_SYSTEM
    assert solve(game, game.initial(0, 1, 0))[0].winner == WINNER_ENVIRONMENT


def test_formula_to_game_explicit_acceptance_equivalent(ad):
    phi = parse_formula(PHI4, ad)
    semantic = formula_to_game(phi, ad, bound=3, m_cap=1)
    explicit = formula_to_game(phi, ad, bound=3, explicit=True, m_cap=1)
    assert isinstance(semantic.acceptance, FormulaAcceptance)
    assert isinstance(explicit.acceptance, ExplicitAcceptance)
    rng = random.Random(5)
    from conftest import random_execution

    for _ in range(60):
        x = random_execution(rng, ad)
        config = abstract_execution(x, 3)
        assert accepts(semantic, config) == accepts(explicit, config)


def test_hand_expansion_compiles_to_example_game(ad):
    # the hand expansion of the reference sentence over one system and one
    # environment letter is exactly the library game's specification
    phi = parse_formula(phi4_hand_text(), ad)
    compiled = formula_to_game(phi, ad, bound=3, explicit=True, m_cap=1)
    library = example5_game()
    rng = random.Random(6)
    from conftest import random_execution

    for _ in range(80):
        x = random_execution(rng, ad)
        config = abstract_execution(x, 3)
        assert accepts(compiled, config) == accepts(library, config)
    for sizes in [(0, 0, 0), (0, 0, 2), (0, 1, 0), (1, 0, 1)]:
        assert (
            solve(compiled, compiled.initial(*sizes))[0].winner
            == solve(library, library.initial(*sizes))[0].winner
        )


def test_compiled_game_matches_first_principles(ad):
    rng = random.Random(7)
    for _ in range(8):
        phi = random_sentence(rng, ad, max_rank=2, depth=3)
        game = formula_to_game(phi, ad)
        for sizes in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0)]:
            by_game = solve(game, game.initial(*sizes))[0].winner
            by_enumeration = bruteforce_synthesis(phi, ad, sizes).winner
            assert by_game == by_enumeration, (phi, sizes)


# ---------------------------------------------------------------------------
# Game -> formula


def test_game_to_formula_round_trip_small():
    game = lemma5_game()
    phi = game_to_formula(game)
    assert fragment_check(phi, {"~"})
    back = formula_to_game(phi, game.alphabet, bound=game.bound)
    for sizes in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0), (2, 1, 0), (1, 2, 0)]:
        assert (
            solve(back, back.initial(*sizes))[0].winner
            == solve(game, game.initial(*sizes))[0].winner
        ), sizes


def test_game_to_formula_acceptance_pointwise():
    game = lemma5_game()
    phi = game_to_formula(game)
    rng = random.Random(8)
    from conftest import random_execution

    for _ in range(60):
        x = random_execution(rng, game.alphabet)
        assert model_check(x, phi) == accepts(game, abstract_execution(x, game.bound))


# ---------------------------------------------------------------------------
# Execution -> play -> execution


def _normalized_execution(ad):
    # pass; environment pushes the shared token into the forbidden zone
    # with two d's; system lifts it out with two a's
    u = ProcessUniverse.of_sizes(0, 0, 2)
    return Execution(ad, u, (("d", 2), ("d", 2), ("a", 2), ("a", 2)))


def test_execution_to_play_blocks(ad):
    game = example5_game()
    w = _normalized_execution(ad)
    play = execution_to_play(w, game)
    assert validate_play(game, play).ok
    # pass + environment block + system block
    assert len(play) == 3
    assert play.steps[0][0].is_pass
    assert play.steps[1][0].side == ENVIRONMENT
    assert play.steps[2][0].side == SYSTEM
    assert play.final == abstract_execution(w, game.bound)


def test_execution_to_play_rejects_unnormalized(ad):
    game = example5_game()
    u = ProcessUniverse.of_sizes(0, 0, 1)
    # a system block that leaves the configuration in the forbidden zone
    w = Execution(ad, u, (("a", 1), ("a", 1)))
    with pytest.raises(InvalidPlayError, match="not normalized"):
        execution_to_play(w, game)


def test_execution_to_play_alphabet_mismatch(ab_cd):
    game = example5_game()
    w = Execution(ab_cd, ProcessUniverse.of_sizes(0, 0, 0), ())
    with pytest.raises(ValueError):
        execution_to_play(w, game)


def test_play_to_execution_is_normalized(ad):
    game = example5_game()
    w = _normalized_execution(ad)
    play = execution_to_play(w, game)
    w2 = play_to_execution(play, game)
    # identities are re-assigned minimally but the multiset of per-process
    # letter loads per type is preserved
    assert per_type_loads(w) == per_type_loads(w2)
    assert execution_to_play(w2, game).steps == play.steps


def per_type_loads(w: Execution):
    loads = {p: Counter() for p in w.universe.all_procs}
    for ev in w.events:
        loads[ev.process][ev.action] += 1
    out = {}
    for ptype in ("s", "e", "se"):
        procs = {
            "s": w.universe.sys_procs,
            "e": w.universe.env_procs,
            "se": w.universe.both_procs,
        }[ptype]
        out[ptype] = Counter(tuple(sorted(loads[p].items())) for p in procs)
    return out


def test_play_round_trip_exact(ad):
    # a play is reproduced exactly by translating to an execution and back
    game = example5_game()
    initial = game.initial(0, 0, 2)
    play = Play(initial)
    play = play.extended(Transition.empty(), initial)
    env_moves = list(iter_legal_moves(game, initial, ENVIRONMENT))
    tau, nxt = env_moves[0]
    play = play.extended(tau, nxt)
    sys_moves = list(iter_legal_moves(game, nxt, SYSTEM))
    tau2, nxt2 = sys_moves[0]
    play = play.extended(tau2, nxt2)
    w = play_to_execution(play, game)
    assert execution_to_play(w, game) == play


def test_play_to_execution_rejects_invalid(ad):
    game = example5_game()
    initial = game.initial(0, 0, 1)
    bogus = Play(
        initial,
        ((Transition.of(ENVIRONMENT, {((0, 0), (0, 1)): (0, 0, 1)}), initial),),
    )
    with pytest.raises(InvalidPlayError):
        play_to_execution(bogus, game)


# ---------------------------------------------------------------------------
# Library games and strategies


def test_library_games_registry():
    lib = library_games()
    assert {"lemma4_game", "lemma5_game", "example5_game"} <= set(lib)
    assert {"lemma4_strategy", "lemma5_strategy", "example5_strategy"} <= set(lib)


def test_lemma4_winners_and_strategy():
    game = lemma4_game()
    # the shared-token axis alternates winners by parity from k=1
    for k, expect in [(1, WINNER_ENVIRONMENT), (2, WINNER_SYSTEM), (3, WINNER_ENVIRONMENT), (4, WINNER_SYSTEM)]:
        assert solve(game, game.initial(0, 0, k))[0].winner == expect, k
    result = verify_strategy(game, game.initial(0, 0, 2), lemma4_strategy)
    assert result.ok, result.reason
    assert not verify_strategy(game, game.initial(0, 0, 1), lemma4_strategy).ok


def test_lemma5_winners_and_strategy():
    game = lemma5_game()
    for ks in range(3):
        for ke in range(3):
            expect = WINNER_SYSTEM if ks >= ke else WINNER_ENVIRONMENT
            assert solve(game, game.initial(ks, ke, 0))[0].winner == expect, (ks, ke)
    assert verify_strategy(game, game.initial(2, 2, 0), lemma5_strategy).ok
    assert verify_strategy(game, game.initial(2, 1, 0), lemma5_strategy).ok


def test_example5_winners_and_strategy():
    game = example5_game()
    for m in range(4):
        assert solve(game, game.initial(0, 0, m))[0].winner == WINNER_SYSTEM, m
    assert solve(game, game.initial(0, 1, 0))[0].winner == WINNER_ENVIRONMENT
    result = verify_strategy(game, game.initial(0, 0, 3), example5_strategy)
    assert result.ok, result.reason
