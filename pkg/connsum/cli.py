"""Command-line front end over `.m3s` documents."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, NoReturn

from connsum.config import get_settings
from connsum.decide import invariant_report, isomorphic
from connsum.endspace import canonical_form, end_count, end_space, enumerate_ends
from connsum.endspace import to_dot as ends_to_dot
from connsum.errors import (
    DslError,
    InputFileError,
    InvalidSpecError,
    OutputFileError,
    PaletteMismatchError,
    PresentationError,
    RealizationError,
    UnfoldLimitError,
    UsageError,
    configure_logging,
    get_component_logger,
)
from connsum.exhaust import back_and_forth, truncate
from connsum.exhaust import to_dot as core_to_dot
from connsum.realize import realize
from connsum.schemas import (
    Count,
    InvariantReport,
    IsoVerdict,
    Obstruction,
    ObstructionKind,
    ValidatedFinite,
    ValidatedRegular,
    ValidatedSpec,
    Verdict,
)
from connsum.textio import load, serialize
from connsum.treeify import treeify
from connsum.utils import dump_json, format_signature, format_signature_multiset

logger = get_component_logger("cli")

EXIT_OK = 0
EXIT_NO = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_NO_INPUT = 66
EXIT_SOFTWARE = 70
EXIT_CANT_CREATE = 73

VERDICT_EXIT = {Verdict.YES: EXIT_OK, Verdict.NO: EXIT_NO, Verdict.UNKNOWN: EXIT_INCONCLUSIVE}


class ArgumentParser(argparse.ArgumentParser):
    """argparse parser reporting usage problems as `UsageError` instead of exiting."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _read(path: str) -> ValidatedFinite | ValidatedRegular | ValidatedSpec:
    try:
        return load(path)
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise InputFileError(f"cannot read {path}: not UTF-8") from exc


def _presentation(path: str) -> ValidatedFinite | ValidatedRegular:
    """Load a presentation; end-space specifications are realized first."""

    value = _read(path)
    if isinstance(value, ValidatedSpec):
        return realize(value)
    return value


def _regular(path: str) -> ValidatedRegular:
    return treeify(_presentation(path))


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    try:
        Path(output).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputFileError(f"cannot write {output}: {exc.strerror or exc}") from exc


def _print(args: argparse.Namespace, payload: dict[str, Any], lines: list[str]) -> None:
    if args.json:
        print(dump_json(payload))
    else:
        print("\n".join(lines))


def _n_text(n: dict[int, Count]) -> str:
    if all(value == Count.nat(0) for value in n.values()):
        return "all 0"
    return ", ".join(f"{k}↦{n[k]}" for k in sorted(n))


def report_payload(report: InvariantReport) -> dict[str, Any]:
    """Stable JSON fields of an invariant report."""

    return {
        "n": {str(k): report.n[k].to_json() for k in sorted(report.n)},
        "end_count": report.end_count.to_json(),
        "signatures": None if report.signatures is None else [list(s) for s in report.signatures],
        "table": report.table.to_json(),
    }


def verdict_payload(verdict: IsoVerdict) -> dict[str, Any]:
    """Stable JSON fields of an isomorphism verdict.

    Args:
        verdict (IsoVerdict): Result of `isomorphic`.

    Returns:
        dict[str, Any]: `verdict`, `tier`, `witness` (or None) and `explanation`.
    """

    witness = verdict.witness
    return {
        "verdict": verdict.verdict.value,
        "tier": verdict.tier,
        "witness": None if witness is None else witness.model_dump(),
        "explanation": verdict.explanation,
    }


def cmd_validate(args: argparse.Namespace) -> int:
    """Parse and validate one document and summarize what it holds.

    Args:
        args (argparse.Namespace): Parsed arguments with `file` and `json`.

    Returns:
        int: `EXIT_OK`; invalid documents raise before anything is printed.
    """

    value = _read(args.file)
    if isinstance(value, ValidatedFinite):
        kind, summary = "graph", f"{len(value.vertices)} vertices, {len(value.edges)} edges"
    elif isinstance(value, ValidatedRegular):
        finite = ", ".join(sorted(value.finite_states)) or "none"
        kind, summary = "tree", f"{len(value.states)} states, finite states: {finite}"
    else:
        kind, summary = "endspace", f"{len(value.automaton.states)} E-states, {len(value.subsets)} subsets"
    _print(args, {"valid": True, "kind": kind, "summary": summary}, [f"valid: {kind} ({summary})"])
    return EXIT_OK


def cmd_invariants(args: argparse.Namespace) -> int:
    """Print the invariant report; end-space documents are realized first.

    Args:
        args (argparse.Namespace): Parsed arguments with `file` and `json`.

    Returns:
        int: `EXIT_OK`.
    """

    report = invariant_report(_presentation(args.file))
    lines = [f"n: {_n_text(report.n)}", f"end_count: {report.end_count}"]
    if report.signatures is not None and not report.closed:
        lines.append(f"signatures: {format_signature_multiset(report.signatures)}")
    lines.append(f"table: {report.table.describe()}")
    _print(args, report_payload(report), lines)
    return EXIT_OK


def cmd_treeify(args: argparse.Namespace) -> int:
    """Write the tree normal form of a graph or tree document.

    Args:
        args (argparse.Namespace): Parsed arguments with `file` and optional `output`.

    Returns:
        int: `EXIT_OK`.
    """

    value = _read(args.file)
    if not isinstance(value, ValidatedFinite | ValidatedRegular):
        raise UsageError("treeify needs a graph or tree document")
    _emit(serialize(treeify(value)), args.output)
    return EXIT_OK


def cmd_realize(args: argparse.Namespace) -> int:
    """Write a tree document realizing an end-space document.

    Args:
        args (argparse.Namespace): Parsed arguments with `file` and optional `output`.

    Returns:
        int: `EXIT_OK`.
    """

    value = _read(args.file)
    if not isinstance(value, ValidatedSpec):
        raise UsageError("realize needs an endspace document")
    _emit(serialize(realize(value)), args.output)
    return EXIT_OK


def cmd_iso(args: argparse.Namespace) -> int:
    """Compare two documents and report the tiered verdict.

    Args:
        args (argparse.Namespace): Parsed arguments with `file1`, `file2` and `json`.

    Returns:
        int: 0 for yes, 1 for no, 2 for unknown.
    """

    verdict = isomorphic(_presentation(args.file1), _presentation(args.file2))
    lines = [f"verdict: {verdict.verdict.value}, tier: {verdict.tier}"]
    if verdict.witness is not None:
        lines.append(f"witness: {verdict.witness}")
    if verdict.explanation:
        lines.append(f"explanation: {verdict.explanation}")
    _print(args, verdict_payload(verdict), lines)
    return VERDICT_EXIT[verdict.verdict]


def cmd_truncate(args: argparse.Namespace) -> int:
    """Print a good truncation as text, JSON or DOT.

    Args:
        args (argparse.Namespace): Parsed arguments with `file`, `depth`, `dot` and `json`.

    Returns:
        int: `EXIT_OK`.
    """

    result = truncate(_regular(args.file), args.depth)
    if args.dot:
        sys.stdout.write(core_to_dot(result))
        return EXIT_OK
    boundary = [
        {"node": leaf.node, "state": leaf.state, "flags": list(leaf.flags)} for leaf in result.boundary
    ]
    payload = {
        "depth": result.depth,
        "max_depth": result.max_depth,
        "closed_manifold": result.closed_manifold,
        "core_size": len(result.core),
        "boundary": boundary,
    }
    lines = [
        f"depth: {result.depth} (deepest leaf {result.max_depth})",
        f"core: {len(result.core)} vertices",
    ]
    if result.closed_manifold:
        lines.append("closed manifold: full tree, no boundary")
    lines += [f"leaf {leaf.node}: {leaf.state} {format_signature(leaf.flags)}" for leaf in result.boundary]
    _print(args, payload, lines)
    return EXIT_OK


def cmd_ends(args: argparse.Namespace) -> int:
    """Print the end count, the ends when finitely many, and the canonical form summary.

    Args:
        args (argparse.Namespace): Parsed arguments with `file`, `dot`, `canonical` and `json`.

    Returns:
        int: `EXIT_OK`.
    """

    ends = end_space(_regular(args.file))
    form = canonical_form(ends)
    if args.dot:
        sys.stdout.write(ends_to_dot(form if args.canonical else ends))
        return EXIT_OK
    count = end_count(ends)
    branches = [] if count.is_infinite else enumerate_ends(ends)
    payload = {
        "end_count": count.to_json(),
        "ends": [{"branch": str(branch), "signature": sorted(sig)} for branch, sig in branches],
        "canonical_states": len(form.automaton.states),
        "table": form.table.to_json(),
    }
    lines = [f"end_count: {count}"]
    lines += [f"end {branch}: {format_signature(sig)}" for branch, sig in branches]
    lines += [f"canonical states: {len(form.automaton.states)}", f"table: {form.table.describe()}"]
    _print(args, payload, lines)
    return EXIT_OK


def cmd_matching(args: argparse.Namespace) -> int:
    """Run the bounded back-and-forth matcher on two documents.

    Args:
        args (argparse.Namespace): Parsed arguments with `file1`, `file2`, `depth` and `json`.

    Returns:
        int: 0 when every stage matched, 1 for an invariant mismatch, 2 when inconclusive.
    """

    result = back_and_forth(_regular(args.file1), _regular(args.file2), args.depth)
    if isinstance(result, Obstruction):
        payload = {"obstruction": result.kind.value, "stage": result.stage, "detail": result.detail}
        _print(args, payload, [f"obstruction: {result.kind.value} at stage {result.stage}", result.detail])
        return EXIT_NO if result.kind is ObstructionKind.INVARIANT_MISMATCH else EXIT_INCONCLUSIVE

    lines = []
    for stage in result.stages:
        lines.append(
            f"stage {stage.index} ({stage.leader} leads): depths {stage.left_depth}/{stage.right_depth}, "
            f"{'bijective' if stage.bijective else 'grouped'}, {len(stage.groups)} groups, "
            f"{len(stage.absorptions)} absorptions"
        )
    _print(args, {"stages": [stage.model_dump() for stage in result.stages]}, lines)
    return EXIT_OK


def build_parser() -> ArgumentParser:
    """Argument parser with one subcommand per library operation."""

    common = ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a machine-readable report")

    parser = ArgumentParser(prog="connsum", description="Connected sums of closed primes along coloured trees")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def command(name: str, handler: Callable[[argparse.Namespace], int], help_text: str) -> ArgumentParser:
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    command("validate", cmd_validate, "parse and validate a document").add_argument("file")
    command("invariants", cmd_invariants, "prime counts and end-space summary").add_argument("file")

    sub = command("treeify", cmd_treeify, "normalize a graph to a tree presentation")
    sub.add_argument("file")
    sub.add_argument("-o", "--output")

    sub = command("iso", cmd_iso, "decide isomorphism of two presentations")
    sub.add_argument("file1")
    sub.add_argument("file2")

    sub = command("realize", cmd_realize, "realize an end-space specification")
    sub.add_argument("file")
    sub.add_argument("-o", "--output")

    sub = command("truncate", cmd_truncate, "good finite truncation")
    sub.add_argument("file")
    sub.add_argument("--depth", type=int, required=True)
    sub.add_argument("--dot", action="store_true", help="write the core as GraphViz text")

    sub = command("ends", cmd_ends, "end count, branches and canonical form")
    sub.add_argument("file")
    sub.add_argument("--dot", action="store_true", help="write the end automaton as GraphViz text")
    sub.add_argument("--canonical", action="store_true", help="with --dot, write the canonical form instead")

    sub = command("matching", cmd_matching, "bounded back-and-forth matcher")
    sub.add_argument("file1")
    sub.add_argument("file2")
    sub.add_argument("--depth", type=int, required=True)
    return parser


def run(argv: list[str]) -> int:
    """Run one command and return its exit code.

    Args:
        argv (list[str]): Arguments after the program name.

    Returns:
        int: 0 success or yes, 1 no, 2 unknown, 64 usage, 65 invalid input,
        66 unreadable input, 73 unwritable output.
    """

    settings = get_settings()
    configure_logging(settings.LOG_LEVEL, settings.LOG_FILE)
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "depth", 0) < 0:
            raise UsageError("--depth must be nonnegative")
        return args.handler(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_INPUT
    except OutputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CANT_CREATE
    except (DslError, PresentationError, InvalidSpecError, PaletteMismatchError, UnfoldLimitError) as exc:
        logger.info("Input rejected", error_type=type(exc).__name__)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RealizationError as exc:
        logger.error("Realization check failed", detail=exc.detail)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE
