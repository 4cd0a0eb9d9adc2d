"""Invariant reports and the tiered isomorphism decision."""

from __future__ import annotations

from connsum.analysis import AutomatonAnalysis, colour_count
from connsum.endspace import canonical_form, end_count, end_space, enumerate_ends
from connsum.errors import PaletteMismatchError, get_component_logger
from connsum.schemas import (
    CanonicalEndForm,
    Count,
    InvariantReport,
    IsoVerdict,
    Signature,
    ValidatedFinite,
    ValidatedRegular,
    Verdict,
    Witness,
)
from connsum.utils import format_signature, format_signature_multiset, timed

logger = get_component_logger("decide")

Presentation = ValidatedFinite | ValidatedRegular


def _report_and_form(p: Presentation) -> tuple[InvariantReport, CanonicalEndForm | None]:
    n = {k: colour_count(p, k) for k in p.palette.colours}
    if isinstance(p, ValidatedFinite):
        return InvariantReport(n=n, end_count=Count.nat(0), signatures=()), None

    ctx = AutomatonAnalysis.from_presentation(p)
    ends = end_space(p, ctx)
    count = end_count(ends)
    signatures: tuple[Signature, ...] | None = None
    if not count.is_infinite:
        signatures = tuple(sorted(tuple(sorted(sig)) for _, sig in enumerate_ends(ends)))
    form = canonical_form(ends)
    report = InvariantReport(n=n, end_count=count, signatures=signatures, table=form.table)
    return report, form


@timed("decide")
def invariant_report(p: Presentation) -> InvariantReport:
    """Compute prime counts and the coloured end-space summary of a presentation.

    Args:
        p (ValidatedFinite | ValidatedRegular): Valid presentation.

    Returns:
        InvariantReport: `n` over palette indices k >= 1, end count, signature multiset
        when the end count is finite, and the invariant table.
    """

    report, _ = _report_and_form(p)
    return report


def first_difference(left: InvariantReport, right: InvariantReport) -> Witness | None:
    """Name the first report field on which two presentations differ, or None."""

    for k in sorted(left.n):
        if left.n[k] != right.n.get(k):
            return Witness(invariant=f"n({k})", left=str(left.n[k]), right=str(right.n.get(k)))
    if left.signatures is not None and right.signatures is not None and left.signatures != right.signatures:
        return Witness(
            invariant="end signature multisets",
            left=format_signature_multiset(left.signatures),
            right=format_signature_multiset(right.signatures),
        )
    if left.end_count != right.end_count:
        return Witness(invariant="end_count", left=str(left.end_count), right=str(right.end_count))
    if left.table != right.table:
        occupied = {s.signature for s in left.table.strata} | {s.signature for s in right.table.strata}
        for signature in sorted(occupied):
            a, b = left.table.stratum(signature), right.table.stratum(signature)
            if a != b:
                return Witness(
                    invariant=f"table stratum {format_signature(signature)}",
                    left=a.describe() if a.occupied else "unoccupied",
                    right=b.describe() if b.occupied else "unoccupied",
                )
        return Witness(invariant="table", left=left.table.describe(), right=right.table.describe())
    return None


@timed("decide")
def isomorphic(p1: Presentation, p2: Presentation) -> IsoVerdict:
    """Decide whether two presentations describe isomorphic manifolds.

    Tier 1 handles closed manifolds, tier 2 finitely many ends, and tier 3 the rest;
    only tier 3 may answer unknown.

    Args:
        p1 (ValidatedFinite | ValidatedRegular): Left presentation.
        p2 (ValidatedFinite | ValidatedRegular): Right presentation over the same palette.

    Returns:
        IsoVerdict: Yes with its certifying tier, No with a witness, or Unknown.
    """

    if p1.palette.labels != p2.palette.labels:
        raise PaletteMismatchError(p1.palette.labels, p2.palette.labels)

    left, left_form = _report_and_form(p1)
    right, right_form = _report_and_form(p2)
    if left.closed and right.closed:
        tier = 1
    elif not left.end_count.is_infinite and not right.end_count.is_infinite:
        tier = 2
    else:
        tier = 3

    witness = first_difference(left, right)
    if witness is not None:
        logger.info("Presentations differ", tier=tier, invariant=witness.invariant)
        return IsoVerdict(verdict=Verdict.NO, tier=tier, witness=witness)
    if tier < 3:
        return IsoVerdict(verdict=Verdict.YES, tier=tier)

    if left_form is not None and right_form is not None and left_form.automaton == right_form.automaton:
        return IsoVerdict(verdict=Verdict.YES, tier=3)
    explanation = (
        "prime counts, end counts and invariant tables agree but the minimized end automata differ "
        f"({len(left_form.automaton.states)} vs {len(right_form.automaton.states)} states); "
        "colour-preserving homeomorphism of the end spaces is unresolved"
    )
    logger.info("Tier 3 comparison unresolved")
    return IsoVerdict(verdict=Verdict.UNKNOWN, tier=3, explanation=explanation)
