"""Cutoff bounds and the existential decision procedure for System sizes.

For a game with explicit acceptance condition, winners of the instances
C_(N, k_e, k_se) — N System tokens against a fixed number of Environment
and shared tokens — eventually stabilize: there is a computable bound
hatN such that the winner is the same for every N >= hatN.  The bound is

    hatN = |L|^(Max+1) * K

where |L| = (B+1)^|A| is the number of locations, K is the largest
constant appearing in the acceptance condition, and
Max = (k_e + k_se) * |A_e| * B caps the number of effective Environment
transitions (each of the k_e + k_se tokens Environment may move can
increase each of its |A_e| environment coordinates at most B times).

`decide` turns the bound into a decision procedure for the question
"does System win for SOME number of own processes?": scan N = 0..hatN,
answering with the least winning N or a sound "empty".  `scan_winning`
tabulates winners along one size axis, flagging whether the sequence
stabilizes within the scanned range — the experiment behind the
no-cutoff examples in the library games, where it provably never does.
"""

from __future__ import annotations

import concurrent.futures
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import SolveBudgetError
from .games import DEFAULT_BRANCH_BUDGET, Game, MoveCaps, UNLIMITED
from .solver import DEFAULT_NODE_BUDGET, WINNER_SYSTEM, solve

__all__ = [
    "CutoffBound",
    "Decision",
    "ScanResult",
    "cutoff_bound",
    "decide",
    "scan_winning",
]


@dataclass(frozen=True)
class CutoffBound:
    """The stabilization bound for one (k_e, k_se) pair.

    K is the largest constant in the acceptance condition, Max the
    maximal number of effective Environment transitions, and
    hatN = |L|^(Max+1) * K the System size beyond which winners are
    constant.
    """

    K: int
    Max: int
    hatN: int


def cutoff_bound(game: Game, k_e: int, k_se: int, K: int | None = None) -> CutoffBound:
    """Compute the cutoff bound for `game` with k_e + k_se fixed tokens.

    K defaults to the largest constant readable from an explicit
    acceptance condition; for formula acceptance the caller must supply
    it (compiling the formula to explicit rows produces one).
    """
    if k_e < 0 or k_se < 0:
        raise ValueError("token counts must be nonnegative")
    if K is None:
        K = game.acceptance.max_constant
    elif K < 0:
        raise ValueError("K must be nonnegative")
    n_locations = (game.bound + 1) ** len(game.alphabet.actions)
    mx = (k_e + k_se) * len(game.alphabet.env_actions) * game.bound
    return CutoffBound(K=K, Max=mx, hatN=n_locations ** (mx + 1) * K)


@dataclass(frozen=True)
class Decision:
    """Outcome of the existential scan over System sizes.

    kind is one of:
      - "nonempty": System wins C_(witness, k_e, k_se), and witness is
        the least such size;
      - "empty": no System size wins (the scan reached hatN, so this is
        sound for all of the naturals);
      - "empty_up_to": no size up to n_max wins, but n_max < hatN — a
        clearly partial answer;
      - "inconclusive": a solve exceeded its budget before an answer.
    """

    kind: str
    witness: int | None
    bound: CutoffBound
    instances_solved: int
    n_max: int | None = None


def _solve_winner(
    game: Game,
    sizes: tuple[int, int, int],
    caps: MoveCaps,
    node_budget: int | None,
    branch_budget: int | None,
) -> str:
    verdict, _ = solve(
        game,
        game.initial(*sizes),
        caps=caps,
        node_budget=node_budget,
        branch_budget=branch_budget,
    )
    return verdict.winner


def _winners(
    game: Game,
    instances: Sequence[tuple[int, int, int]],
    caps: MoveCaps,
    node_budget: int | None,
    branch_budget: int | None,
    jobs: int,
) -> Iterable[str]:
    """Yield winners for the instances in order, optionally in parallel.

    Instances are independent, so any evaluation order gives the same
    winners; results are always yielded in input order.
    """
    if jobs <= 1 or len(instances) <= 1:
        for sizes in instances:
            yield _solve_winner(game, sizes, caps, node_budget, branch_budget)
        return
    # Keep only a bounded window of instances in flight.  The consumer may
    # stop early (decide() returns on the first System win), and instances
    # grow with N, so submitting everything upfront would leave the pool
    # grinding through huge abandoned solves on shutdown.
    queue = deque(instances)
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        pending: deque[concurrent.futures.Future[str]] = deque()

        def submit_next() -> None:
            sizes = queue.popleft()
            pending.append(
                pool.submit(_solve_winner, game, sizes, caps, node_budget, branch_budget)
            )

        try:
            while queue and len(pending) < 2 * jobs:
                submit_next()
            while pending:
                future = pending.popleft()
                result = future.result()
                if queue:
                    submit_next()
                yield result
        finally:
            for future in pending:
                future.cancel()
            pool.shutdown(wait=True, cancel_futures=True)


def decide(
    game: Game,
    k_e: int,
    k_se: int,
    caps: MoveCaps = UNLIMITED,
    node_budget: int | None = DEFAULT_NODE_BUDGET,
    branch_budget: int | None = DEFAULT_BRANCH_BUDGET,
    K: int | None = None,
    n_max: int | None = None,
    jobs: int = 1,
) -> Decision:
    """Is there a System size N for which System wins C_(N, k_e, k_se)?

    Scans N = 0, 1, ... up to hatN (or the user cap n_max, if smaller),
    returning the least winning N on first hit.  A full scan with no
    winner is a sound "empty"; a capped scan is only "empty_up_to" the
    cap.  Budget exhaustion in any instance yields "inconclusive" —
    never a guessed answer.
    """
    bound = cutoff_bound(game, k_e, k_se, K)
    limit = bound.hatN if n_max is None else min(n_max, bound.hatN)
    instances = [(n, k_e, k_se) for n in range(limit + 1)]
    solved = 0
    try:
        for n, winner in enumerate(
            _winners(game, instances, caps, node_budget, branch_budget, jobs)
        ):
            solved = n + 1
            if winner == WINNER_SYSTEM:
                return Decision("nonempty", n, bound, solved, n_max)
    except SolveBudgetError:
        return Decision("inconclusive", None, bound, solved, n_max)
    if limit < bound.hatN:
        return Decision("empty_up_to", None, bound, solved, n_max)
    return Decision("empty", None, bound, solved, n_max)


@dataclass(frozen=True)
class ScanResult:
    """Winner table along one size axis.

    winners[i] is the winner at values[i]; constant_from is the least
    index from which the winner sequence is constant to the end (None
    for an empty scan); stabilizes flags whether that happens strictly
    before the final entry, i.e. the tail is constant on two or more
    instances.  An alternating sequence never stabilizes.
    """

    axis: str
    fixed: tuple[int, int]
    values: tuple[int, ...]
    winners: tuple[str, ...]
    constant_from: int | None
    stabilizes: bool


_AXES = ("s", "e", "se")


def _sizes_for(axis: str, fixed: tuple[int, int], value: int) -> tuple[int, int, int]:
    if axis == "s":
        return (value, fixed[0], fixed[1])
    if axis == "e":
        return (fixed[0], value, fixed[1])
    return (fixed[0], fixed[1], value)


def scan_winning(
    game: Game,
    axis: str,
    fixed: tuple[int, int],
    values: Iterable[int],
    caps: MoveCaps = UNLIMITED,
    node_budget: int | None = DEFAULT_NODE_BUDGET,
    branch_budget: int | None = DEFAULT_BRANCH_BUDGET,
    jobs: int = 1,
) -> ScanResult:
    """Solve C at every value along `axis`, the other two sizes fixed.

    For axis "s" the fixed pair is (k_e, k_se); for "e" it is
    (k_s, k_se); for "se" it is (k_s, k_e).
    """
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {_AXES}, got {axis!r}")
    vals = tuple(values)
    if any(v < 0 for v in vals):
        raise ValueError("scan values must be nonnegative")
    instances = [_sizes_for(axis, fixed, v) for v in vals]
    winners = tuple(_winners(game, instances, caps, node_budget, branch_budget, jobs))
    constant_from: int | None = None
    for i in range(len(winners) - 1, -1, -1):
        if winners[i] != winners[-1]:
            break
        constant_from = i
    stabilizes = constant_from is not None and constant_from <= len(winners) - 2
    return ScanResult(axis, tuple(fixed), vals, winners, constant_from, stabilizes)
