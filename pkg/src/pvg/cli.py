"""Command-line front end.

Every command reads text or JSON files in the formats of
:mod:`pvg.formats`, prints a deterministic JSON run report to stdout
(`--quiet` reduces it to the bare verdict token) and exits with:

  0  success (including negative verdicts: "false", "unsat", "empty")
  2  malformed input — parse errors, mismatched alphabets, bad flags
  3  a normalization/inversion refused its work budget
  4  a solve exceeded its budget: the reported verdict is "inconclusive"

The report contains the command name, the tool version, a SHA-256
digest per input file and the result payload; wall-clock timing is the
single nondeterministic field, kept separate from the payload so that
identical invocations produce identical results.  Output files are
written atomically and never left half-written.  The environment
variable PVG_BUDGET overrides the default work budgets of all commands.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from typing import Any, Callable

from . import __version__
from .abstraction import Configuration
from .cutoff import decide as cutoff_decide
from .cutoff import scan_winning
from .errors import (
    FragmentError,
    InvalidPlayError,
    NormalizeBudgetError,
    ParseError,
    PvgError,
    SolveBudgetError,
)
from .formats import (
    config_from_json,
    decision_to_json,
    dumps,
    game_from_json,
    game_to_json,
    nf_to_json,
    parse_execution_file,
    parse_formula_file,
    parse_tcm,
    play_from_json,
    play_to_json,
    render_execution_file,
    render_formula_file,
    scan_to_json,
    strategy_from_json,
    strategy_to_json,
    verdict_to_json,
    verify_to_json,
    write_text_atomic,
)
from .games import Game, MoveCaps, UNLIMITED, validate_play
from .logic import model_check
from .normalform import normalize, satisfiable
from .reductions import (
    encode_2cm,
    execution_to_play,
    formula_to_game,
    game_to_formula,
    library_games,
    play_to_execution,
    tcm_run_bounded,
    tcm_strategy,
)
from .solver import solve, verify_strategy

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_REFUSED = 3
EXIT_INCONCLUSIVE = 4

_DEFAULT_TCM_STEPS = 64


class _CliError(Exception):
    """Input-level failure with a chosen exit code."""

    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# Report plumbing


class _Run:
    """Collects inputs and the result of one command invocation."""

    def __init__(self, command: str):
        self.command = command
        self.inputs: dict[str, str] = {}
        self.started = time.monotonic()

    def read(self, path: str) -> str:
        try:
            with open(path, "rb") as handle:
                raw = handle.read()
        except OSError as exc:
            raise _CliError(f"cannot read {path}: {exc.strerror}") from None
        self.inputs[path] = hashlib.sha256(raw).hexdigest()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise _CliError(f"{path} is not UTF-8 text: {exc}") from None

    def report(self, result: dict, quiet_token: str, quiet: bool) -> str:
        if quiet:
            return quiet_token + "\n"
        elapsed_ms = round(1000 * (time.monotonic() - self.started), 3)
        return dumps(
            {
                "command": self.command,
                "version": __version__,
                "inputs": self.inputs,
                "result": result,
                "timing_ms": elapsed_ms,
            }
        )


def _budget(args: argparse.Namespace, default: int | None) -> int | None:
    if getattr(args, "budget", None) is not None:
        return args.budget
    env = os.environ.get("PVG_BUDGET")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _CliError(f"PVG_BUDGET must be an integer, got {env!r}") from None
    return default


def _caps(args: argparse.Namespace) -> MoveCaps:
    tokens = getattr(args, "caps_tokens", None)
    letters = getattr(args, "caps_letters", None)
    if tokens is None and letters is None:
        return UNLIMITED
    return MoveCaps(max_tokens_per_move=tokens, max_letters_per_token=letters)


def _parse_game_json(run: _Run, path: str) -> Game:
    text = run.read(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from None
    return game_from_json(data)


def _parse_json_file(run: _Run, path: str, what: str) -> Any:
    text = run.read(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{what} file {path} is not valid JSON: {exc}") from None


def _initial_config(args: argparse.Namespace, run: _Run, game: Game) -> Configuration:
    if args.config is not None:
        if args.ks is not None or args.ke is not None or args.kse is not None:
            raise _CliError("give either --config or --ks/--ke/--kse, not both")
        data = _parse_json_file(run, args.config, "configuration")
        config = config_from_json(data, game.alphabet)
        if config.bound != game.bound:
            raise _CliError(
                f"configuration bound {config.bound} does not match game bound {game.bound}"
            )
        return config
    return game.initial(args.ks or 0, args.ke or 0, args.kse or 0)


def _write_output(args: argparse.Namespace, text: str) -> None:
    if getattr(args, "output", None):
        write_text_atomic(args.output, text)


# ---------------------------------------------------------------------------
# Commands


def _cmd_check(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    alphabet, phi = parse_formula_file(run.read(args.formula))
    execution = parse_execution_file(run.read(args.execution))
    if execution.alphabet != alphabet:
        raise _CliError("formula and execution declare different alphabets")
    value = model_check(execution, phi)
    token = "true" if value else "false"
    return {"value": value}, token, EXIT_OK


def _cmd_normalize(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    alphabet, phi = parse_formula_file(run.read(args.formula))
    budget = _budget(args, 1_000_000)
    nf = normalize(phi, alphabet, bound=args.B, m_cap=args.mcap, budget=budget)
    payload = nf_to_json(nf)
    _write_output(args, dumps(payload))
    return payload, f"{len(nf.clauses)} clauses", EXIT_OK


def _cmd_sat(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    alphabet, phi = parse_formula_file(run.read(args.formula))
    budget = _budget(args, 1_000_000)
    witness = satisfiable(phi, alphabet, count_cap=args.count_cap, budget=budget)
    if witness is None:
        return {"satisfiable": False}, "unsat", EXIT_OK
    text = render_execution_file(witness)
    _write_output(args, text)
    return {"satisfiable": True, "witness": text}, "sat", EXIT_OK


def _cmd_compile(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    alphabet, phi = parse_formula_file(run.read(args.formula))
    budget = _budget(args, 1_000_000)
    game = formula_to_game(
        phi,
        alphabet,
        bound=args.B,
        explicit=args.explicit,
        m_cap=args.mcap,
        budget=budget,
    )
    payload = game_to_json(game)
    _write_output(args, dumps(payload))
    return payload, "compiled", EXIT_OK


def _cmd_invert(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    game = _parse_game_json(run, args.game)
    phi = game_to_formula(game, budget=_budget(args, None) or 50_000)
    text = render_formula_file(game.alphabet, phi)
    _write_output(args, text)
    return {"formula": text}, "inverted", EXIT_OK


def _cmd_solve(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    game = _parse_game_json(run, args.game)
    initial = _initial_config(args, run, game)
    caps = _caps(args)
    try:
        verdict, strategy = solve(
            game, initial, caps=caps, node_budget=_budget(args, 10_000_000)
        )
    except SolveBudgetError as exc:
        return {"winner": "inconclusive", "reason": str(exc)}, "inconclusive", EXIT_INCONCLUSIVE
    payload = verdict_to_json(verdict)
    if not caps.is_unlimited:
        payload["semantics"] = "capped"
    if args.emit_strategy:
        if strategy is None:
            payload["strategy"] = None
        else:
            write_text_atomic(
                args.emit_strategy, dumps(strategy_to_json(strategy, game.alphabet))
            )
            payload["strategy"] = args.emit_strategy
    return payload, verdict.winner, EXIT_OK


def _cmd_decide(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    text = run.read(args.file)
    if text.lstrip().startswith("{"):
        try:
            game = game_from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.file} is not valid JSON: {exc}") from None
    else:
        alphabet, phi = parse_formula_file(text)
        # Explicit rows so the cutoff constant K is readable from the game.
        game = formula_to_game(
            phi, alphabet, explicit=True, budget=_budget(args, 1_000_000)
        )
    decision = cutoff_decide(
        game,
        args.ke,
        args.kse,
        caps=_caps(args),
        node_budget=_budget(args, 10_000_000),
        K=args.K,
        n_max=args.n_max,
        jobs=args.jobs,
    )
    payload = decision_to_json(decision)
    code = EXIT_INCONCLUSIVE if decision.kind == "inconclusive" else EXIT_OK
    return payload, decision.kind, code


def _parse_range(text: str) -> range:
    lo, sep, hi = text.partition("..")
    if not sep:
        lo = hi = text
    try:
        start, stop = int(lo), int(hi)
    except ValueError:
        raise _CliError(f"bad range {text!r}; expected LO..HI") from None
    if start < 0 or stop < start:
        raise _CliError(f"bad range {text!r}; expected 0 <= LO <= HI")
    return range(start, stop + 1)


def _cmd_scan(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    game = _parse_game_json(run, args.game)
    fixed_parts = args.fixed.split(",")
    if len(fixed_parts) != 2:
        raise _CliError(f"--fixed must be two comma-separated numbers, got {args.fixed!r}")
    try:
        fixed = (int(fixed_parts[0]), int(fixed_parts[1]))
    except ValueError:
        raise _CliError(f"--fixed must be two comma-separated numbers, got {args.fixed!r}") from None
    try:
        result = scan_winning(
            game,
            args.axis,
            fixed,
            _parse_range(args.range),
            caps=_caps(args),
            node_budget=_budget(args, 10_000_000),
            jobs=args.jobs,
        )
    except SolveBudgetError as exc:
        return {"winner": "inconclusive", "reason": str(exc)}, "inconclusive", EXIT_INCONCLUSIVE
    payload = scan_to_json(result)
    token = "".join(w[0] for w in result.winners)
    return payload, token, EXIT_OK


def _cmd_simulate(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    game = _parse_game_json(run, args.game)
    if (args.play is None) == (args.execution is None):
        raise _CliError("give exactly one of --play or --execution")
    if args.play is not None:
        play = play_from_json(_parse_json_file(run, args.play, "play"))
        if play.initial.alphabet != game.alphabet:
            raise _CliError("play and game declare different alphabets")
        check = validate_play(game, play)
        if not check.ok:
            raise InvalidPlayError(f"play is not valid for this game: {check.reason}")
        execution = play_to_execution(play, game)
        text = render_execution_file(execution)
        _write_output(args, text)
        return {"execution": text}, "ok", EXIT_OK
    execution = parse_execution_file(run.read(args.execution))
    if execution.alphabet != game.alphabet:
        raise _CliError("execution and game declare different alphabets")
    play = execution_to_play(execution, game)
    payload = play_to_json(play)
    _write_output(args, dumps(payload))
    return {"play": payload}, "ok", EXIT_OK


def _cmd_encode_2cm(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    machine = parse_tcm(run.read(args.machine))
    game = encode_2cm(machine)
    payload = game_to_json(game)
    _write_output(args, dumps(payload))
    return payload, "encoded", EXIT_OK


def _resolve_strategy(args: argparse.Namespace, run: _Run, game: Game):
    name = args.strategy
    library = library_games()
    if name in library and name.endswith("_strategy"):
        return library[name]
    if name.startswith("tcm:"):
        _, _, spec = name.partition(":")
        path, _, steps_text = spec.partition(":")
        steps = int(steps_text) if steps_text else _DEFAULT_TCM_STEPS
        machine = parse_tcm(run.read(path))
        machine_run = tcm_run_bounded(machine, steps)
        if machine_run is None:
            raise _CliError(
                f"machine does not reach its halting state within {steps} steps"
            )
        return tcm_strategy(machine, machine_run)
    if os.path.exists(name):
        strategy, alphabet = strategy_from_json(_parse_json_file(run, name, "strategy"))
        if alphabet != game.alphabet:
            raise _CliError("strategy and game declare different alphabets")
        return strategy
    raise _CliError(
        f"unknown strategy {name!r}: expected a library strategy name "
        f"({', '.join(sorted(k for k in library if k.endswith('_strategy')))}), "
        "'tcm:MACHINE_FILE[:STEPS]', or a strategy JSON file"
    )


def _cmd_verify(args: argparse.Namespace, run: _Run) -> tuple[dict, str, int]:
    game = _parse_game_json(run, args.game)
    strategy = _resolve_strategy(args, run, game)
    initial = _initial_config(args, run, game)
    caps = _caps(args)
    result = verify_strategy(
        game, initial, strategy, caps=caps, branch_budget=_budget(args, 2_000_000)
    )
    payload = verify_to_json(result)
    if not caps.is_unlimited:
        payload["semantics"] = "capped"
    return payload, "true" if result.ok else "false", EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _add_sizes(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--ks", type=int, help="number of System processes")
    parser.add_argument("--ke", type=int, help="number of Environment processes")
    parser.add_argument("--kse", type=int, help="number of shared processes")
    parser.add_argument("--config", help="initial configuration JSON file")


def _add_caps(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--caps-tokens", type=int, help="cap tokens moved per transition (capped semantics)"
    )
    parser.add_argument(
        "--caps-letters", type=int, help="cap letters advanced per token (capped semantics)"
    )


def _add_budget(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--budget", type=int, help="work budget (default: PVG_BUDGET or built-in)")


def _add_common(parser: argparse.ArgumentParser) -> None:
    # Also accepted after the subcommand; SUPPRESS keeps an absent flag
    # from overwriting the value parsed before the subcommand.
    parser.add_argument(
        "--quiet",
        action="store_true",
        default=argparse.SUPPRESS,
        help="print only the verdict token",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=argparse.SUPPRESS,
        help="seed for randomized utilities (reserved)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvg",
        description="Model checking, normal forms, parameterized vector games and cutoffs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--quiet", action="store_true", help="print only the verdict token")
    parser.add_argument(
        "--seed", type=int, default=0, help="seed for randomized utilities (reserved)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        return p

    p = add_parser("check", "evaluate a sentence on an execution")
    p.add_argument("formula", help="formula file")
    p.add_argument("execution", help="execution file")
    p.set_defaults(handler=_cmd_check)

    p = add_parser("normalize", "counting normal form of a sentence")
    p.add_argument("formula", help="formula file")
    p.add_argument("--B", type=int, help="saturation bound (default: threshold)")
    p.add_argument("--mcap", type=int, help="count cap (default: quantifier rank)")
    _add_budget(p)
    p.add_argument("-o", "--output", help="write the normal form JSON here")
    p.set_defaults(handler=_cmd_normalize)

    p = add_parser("sat", "satisfiability with a witness execution")
    p.add_argument("formula", help="formula file")
    p.add_argument("--count-cap", type=int, help="max processes per profile in the witness")
    _add_budget(p)
    p.add_argument("-o", "--output", help="write the witness execution here")
    p.set_defaults(handler=_cmd_sat)

    p = add_parser("compile", "compile a sentence into a vector game")
    p.add_argument("formula", help="formula file")
    p.add_argument("--B", type=int, help="game bound (default: threshold)")
    p.add_argument("--mcap", type=int, help="count cap for --explicit rows")
    p.add_argument(
        "--explicit", action="store_true", help="normalize into explicit acceptance rows"
    )
    _add_budget(p)
    p.add_argument("-o", "--output", help="write the game JSON here")
    p.set_defaults(handler=_cmd_compile)

    p = add_parser("invert", "recover a sentence from explicit acceptance rows")
    p.add_argument("game", help="game JSON file")
    _add_budget(p)
    p.add_argument("-o", "--output", help="write the formula file here")
    p.set_defaults(handler=_cmd_invert)

    p = add_parser("solve", "decide one game instance exactly")
    p.add_argument("game", help="game JSON file")
    _add_sizes(p)
    _add_caps(p)
    _add_budget(p)
    p.add_argument("--emit-strategy", help="write System's winning strategy JSON here")
    p.set_defaults(handler=_cmd_solve)

    p = add_parser("decide", "is there a winning System size for fixed --ke/--kse?")
    p.add_argument("file", help="game JSON or formula file")
    p.add_argument("--ke", type=int, required=True, help="Environment processes")
    p.add_argument("--kse", type=int, required=True, help="shared processes")
    p.add_argument("--K", type=int, help="largest acceptance constant, if not readable")
    p.add_argument("--n-max", type=int, help="scan cap below the cutoff bound (partial answer)")
    p.add_argument("--jobs", type=int, default=1, help="parallel instance solving")
    _add_caps(p)
    _add_budget(p)
    p.set_defaults(handler=_cmd_decide)

    p = add_parser("scan", "winner table along one size axis")
    p.add_argument("game", help="game JSON file")
    p.add_argument("axis", choices=("s", "e", "se"), help="which size varies")
    p.add_argument("range", help="inclusive range LO..HI")
    p.add_argument(
        "--fixed", default="0,0", help="the other two sizes, e.g. '0,0' (default)"
    )
    p.add_argument("--jobs", type=int, default=1, help="parallel instance solving")
    _add_caps(p)
    _add_budget(p)
    p.set_defaults(handler=_cmd_scan)

    p = add_parser("simulate", "translate between plays and executions")
    p.add_argument("game", help="game JSON file")
    p.add_argument("--play", help="play JSON file (translate to an execution)")
    p.add_argument("--execution", help="execution file (translate to a play)")
    p.add_argument("-o", "--output", help="write the translation here")
    p.set_defaults(handler=_cmd_simulate)

    p = add_parser("encode-2cm", "encode a two-counter machine as a game")
    p.add_argument("machine", help="counter machine file")
    p.add_argument("-o", "--output", help="write the game JSON here")
    p.set_defaults(handler=_cmd_encode_2cm)

    p = add_parser("verify", "check a System strategy against all replies")
    p.add_argument("game", help="game JSON file")
    p.add_argument(
        "strategy",
        help="library strategy name, 'tcm:MACHINE_FILE[:STEPS]', or strategy JSON file",
    )
    _add_sizes(p)
    _add_caps(p)
    _add_budget(p)
    p.set_defaults(handler=_cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    run = _Run(args.command)
    handler: Callable[[argparse.Namespace, _Run], tuple[dict, str, int]] = args.handler
    try:
        result, token, code = handler(args, run)
    except _CliError as exc:
        print(f"pvg {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except ParseError as exc:
        print(f"pvg {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NormalizeBudgetError as exc:
        print(f"pvg {args.command}: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except SolveBudgetError as exc:
        print(f"pvg {args.command}: inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except InvalidPlayError as exc:
        print(f"pvg {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FragmentError, PvgError, ValueError) as exc:
        print(f"pvg {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(run.report(result, token, args.quiet))
    return code


if __name__ == "__main__":
    sys.exit(main())
