"""Specification checks and realization of prescribed coloured end spaces."""

from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given, settings

from builders import PALETTE, WIDE_PALETTE, endspace_specs, live_prefix_states, spec, tree
from connsum.decide import invariant_report, isomorphic
import connsum.realize as realize_module
from connsum.errors import InvalidSpecError, RealizationError
from connsum.realize import realize, validate_spec
from connsum.schemas import Count, EndSpaceSpec, Palette, PrefixAutomaton, Verdict

FULL_BINARY = {"S": {0: "S", 1: "S"}}


def test_empty_end_space_gives_closed_sphere() -> None:
    p = realize(spec({}, None))
    assert p.root == "P0"
    assert p.states["P0"].children == {}
    assert invariant_report(p).closed


def test_empty_end_space_with_counts_hangs_chains() -> None:
    p = realize(spec({}, None, counts={3: 2, 1: 1}))
    assert p.states["P0"].children == {"C1_1": 1, "C3_1": 1}
    assert p.states["C3_1"].children == {"C3_2": 1}
    report = invariant_report(p)
    assert report.closed
    assert report.n == {1: Count.nat(1), 2: Count.nat(0), 3: Count.nat(2)}


def test_full_binary_without_subsets_is_a_cantor_tree() -> None:
    p = realize(spec(FULL_BINARY, "S"))
    assert p.states == {"P0": p.states["P0"]}
    assert p.states["P0"].children == {"P0": 2}
    verdict = isomorphic(p, tree({"A": (0, ["A", "A"])}, "A"))
    assert verdict.verdict is Verdict.YES
    assert verdict.tier == 3


def test_left_ray_subset_marks_one_end() -> None:
    """Allowing only symbol 0 flags the single branch 0^ω inside the Cantor set."""

    p = realize(spec(FULL_BINARY, "S", subsets={2: [(None, 0)]}, counts={3: 2}))
    assert p.root == "R"
    assert p.states["P0"].children == {"P0": 1, "P1": 1, "L2": 1}
    assert p.states["P1"].children == {"P1": 2}
    assert p.states["R"].children == {"P0": 1, "P1": 1, "L2": 1, "C3_1": 1}

    report = invariant_report(p)
    assert report.n[2] == Count.infinity()
    assert report.n[3] == Count.nat(2)
    flagged = report.table.stratum((2,))
    assert flagged.occupied and flagged.perfect and not flagged.isolated


def test_single_ray_with_count_roots_a_copy() -> None:
    p = realize(spec({"S": {0: "S"}}, "S", counts={3: 2}))
    assert p.root == "R"
    assert p.states["R"].children == {"P0": 1, "C3_1": 1}
    assert p.states["P0"].children == {"P0": 1}
    report = invariant_report(p)
    assert report.n[3] == Count.nat(2)
    assert report.end_count == Count.nat(1)
    assert report.signatures == ((),)


def test_non_recurring_start_takes_chains_directly() -> None:
    p = realize(spec({"S": {0: "T"}, "T": {0: "T"}}, "S", counts={2: 1}))
    assert p.root == "P0"
    assert p.states["P0"].children == {"P1": 1, "C2_1": 1}


def test_state_specific_allowance() -> None:
    """Allowing S--1-->T and T's loop puts exactly one end into E_2."""

    transitions = {"S": {0: "S", 1: "T"}, "T": {0: "T"}}
    p = realize(spec(transitions, "S", subsets={2: [("S", 1), ("T", 0)]}))
    report = invariant_report(p)
    assert report.end_count == Count.infinity()
    assert report.n[2] == Count.infinity()
    assert report.table.stratum((2,)).isolated


@pytest.mark.parametrize(
    ("raw", "reason"),
    [
        (EndSpaceSpec(palette=Palette(labels=("S3",))), "palette"),
        (EndSpaceSpec(palette=PALETTE, automaton=PrefixAutomaton(transitions={"S": {0: "S"}})), "no root"),
        (EndSpaceSpec(palette=PALETTE, automaton=PrefixAutomaton(root="S", transitions={"S": {2: "S"}})), "symbol"),
        (
            EndSpaceSpec(palette=PALETTE, automaton=PrefixAutomaton(root="S", transitions={"S": {0: "S", 1: "D"}})),
            "dead state D",
        ),
        (
            EndSpaceSpec(
                palette=PALETTE,
                automaton=PrefixAutomaton(root="S", transitions=FULL_BINARY),
                subsets={2: ((None, 0),)},
                finite_counts={2: 1},
            ),
            "index clash",
        ),
        (
            EndSpaceSpec(
                palette=PALETTE,
                automaton=PrefixAutomaton(root="S", transitions=FULL_BINARY),
                subsets={1: ((None, 0),)},
            ),
            "subset colour 1",
        ),
        (EndSpaceSpec(palette=PALETTE, finite_counts={4: 1}), "count colour 4"),
        (EndSpaceSpec(palette=PALETTE, finite_counts={2: -1}), "negative"),
        (
            EndSpaceSpec(
                palette=PALETTE,
                automaton=PrefixAutomaton(root="S", transitions={"S": {0: "S"}}),
                subsets={2: (("S", 1),)},
            ),
            "unknown transition",
        ),
    ],
)
def test_invalid_specifications(raw: EndSpaceSpec, reason: str) -> None:
    with pytest.raises(InvalidSpecError) as exc_info:
        validate_spec(raw)
    assert reason in str(exc_info.value)


def test_subsets_are_pruned_to_live_transitions() -> None:
    checked = spec({"S": {0: "S", 1: "T"}, "T": {0: "T"}}, "S", subsets={2: [("S", 1)]})
    assert checked.live_subsets[2] == frozenset()


def _branches(transitions: dict[str, dict[int, str]], root: str) -> list[frozenset[tuple[str, int]]]:
    """Transition sets of the simple eventually periodic branches of E."""

    found: list[frozenset[tuple[str, int]]] = []

    def walk(state: str, path: tuple[str, ...], moves: frozenset[tuple[str, int]]) -> None:
        for symbol, target in sorted(transitions.get(state, {}).items()):
            used = moves | {(state, symbol)}
            if target in path or target == state:
                found.append(used)
            else:
                walk(target, (*path, state), used)

    walk(root, (), frozenset())
    return found


def _has_infinitely_many_branches(transitions: dict[str, dict[int, str]], root: str) -> bool:
    """True when a two-way state lies below some cycle."""

    def below(start: str) -> set[str]:
        seen, stack = set(), [start]
        while stack:
            for target in transitions.get(stack.pop(), {}).values():
                if target not in seen:
                    seen.add(target)
                    stack.append(target)
        return seen

    reachable = below(root) | {root}
    cyclic = {state for state in reachable if state in below(state)}
    return any(len(transitions.get(s, {})) == 2 for c in cyclic for s in below(c))


@settings(max_examples=200, deadline=None)
@given(endspace_specs())
def test_realized_invariants_reproduce_the_specification(checked) -> None:
    p = realize(checked)
    report = invariant_report(p)
    transitions, root = checked.automaton.transitions, checked.automaton.root

    allowed: dict[int, set[tuple[str, int]]] = {}
    for colour, entries in checked.subsets.items():
        allowed[colour] = set()
        for state, symbol in entries:
            allowed[colour].update(
                (s, b) for s, moves in transitions.items() for b in moves if b == symbol and state in (None, s)
            )

    for colour in WIDE_PALETTE.colours:
        if colour in checked.finite_counts:
            assert report.n[colour] == Count.nat(checked.finite_counts[colour])
        elif colour in allowed and root is not None and root in live_prefix_states(transitions, allowed[colour]):
            assert report.n[colour] == Count.infinity()
        else:
            assert report.n[colour] == Count.nat(0)

    if root is None:
        assert report.closed
        return
    if _has_infinitely_many_branches(transitions, root):
        assert report.end_count == Count.infinity()
        return
    expected = Counter(
        tuple(sorted(colour for colour, moves in allowed.items() if branch <= moves))
        for branch in _branches(transitions, root)
    )
    assert Counter(report.signatures) == expected


def test_state_count_bound_counts_the_leaf_states() -> None:
    p = realize(spec(FULL_BINARY, "S", subsets={2: [(None, 0)]}, counts={3: 1}))
    assert sorted(p.states) == ["C3_1", "L2", "P0", "P1", "R"]
    assert len(p.states) == 1 * 2**1 + 1 + 1 + 1


@settings(max_examples=200, deadline=None)
@given(endspace_specs())
def test_realized_state_count_is_bounded(checked) -> None:
    p = realize(checked)
    subsets = len(checked.subsets)
    bound = len(checked.automaton.states) * 2**subsets + subsets + sum(checked.finite_counts.values()) + 1
    assert len(p.states) <= bound


def test_long_chains_respect_the_node_limit(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv("CONNSUM_UNFOLD_NODE_LIMIT", "5")
    assert realize(spec({"S": {0: "S"}}, "S", counts={3: 5})).states["C3_5"].children == {}
    with pytest.raises(InvalidSpecError) as exc_info:
        realize(spec({"S": {0: "S"}}, "S", counts={2: 3, 3: 3}))
    assert "6 chain states (limit 5)" in str(exc_info.value)


@pytest.mark.parametrize(
    ("update", "message"),
    [
        ({"end_count": Count.nat(7)}, "end count is 7, expected 1"),
        ({"signatures": ((2,),)}, "end signatures are {{2}}, expected {∅}"),
        ({"n": {1: Count.nat(0), 2: Count.nat(0), 3: Count.nat(1)}}, "n(3) is 1, expected 2"),
    ],
)
def test_disagreeing_invariants_are_raised(monkeypatch: pytest.MonkeyPatch, update: dict, message: str) -> None:
    honest = realize_module.invariant_report
    monkeypatch.setattr(realize_module, "invariant_report", lambda p: honest(p).model_copy(update=update))
    with pytest.raises(RealizationError) as exc_info:
        realize(spec({"S": {0: "S"}}, "S", counts={3: 2}))
    assert exc_info.value.detail == message
