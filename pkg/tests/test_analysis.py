"""Occurrence classes, prime counts and Inf_k sets."""

from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given, settings

from builders import finite_graphs, graph, regular_automata, tree
from connsum.analysis import AutomatonAnalysis, betti, colour_count, inf_states, occurrence_class
from connsum.errors import BadColourIndexError, ReservedColourError, UnknownStateError
from connsum.schemas import Count


def _colour_up_to(p, colour: int, depth: int) -> int:
    """Colour-`colour` vertices within `depth` of the root, by state vectors."""

    frontier, total = Counter({p.root: 1}), 0
    for _ in range(depth + 1):
        total += sum(count for state, count in frontier.items() if p.states[state].colour == colour)
        following: Counter[str] = Counter()
        for state, count in frontier.items():
            for child, multiplicity in p.states[state].children.items():
                following[child] += count * multiplicity
        frontier = following
    return total


def test_betti_counts_loops_and_parallel_edges() -> None:
    assert betti(graph({"v0": 2})) == 0
    assert betti(graph({"v0": 2}, [("v0", "v0")])) == 1
    assert betti(graph({"v0": 2, "v1": 3}, [("v0", "v1"), ("v0", "v1")])) == 1


def test_finite_graph_counts_add_cycle_rank_to_s2xs1() -> None:
    """A loop contributes one S2xS1 summand on top of colour-1 vertices."""

    g = graph({"v0": 2, "v1": 1}, [("v0", "v0"), ("v0", "v1")])
    assert colour_count(g, 1) == Count.nat(2)
    assert colour_count(g, 2) == Count.nat(1)
    assert colour_count(g, 3) == Count.nat(0)


def test_colour_zero_is_reserved() -> None:
    with pytest.raises(ReservedColourError):
        colour_count(graph({"v0": 0}), 0)


def test_colour_outside_palette_is_rejected() -> None:
    with pytest.raises(BadColourIndexError):
        colour_count(graph({"v0": 0}), 9)


def test_finite_tree_counts_multiplicities() -> None:
    p = tree({"A": (0, ["B", "B"]), "B": (2, ["C"]), "C": (3, [])}, "A")
    assert colour_count(p, 2) == Count.nat(2)
    assert colour_count(p, 3) == Count.nat(2)
    assert colour_count(p, 1) == Count.nat(0)


def test_cycle_makes_downstream_occurrences_infinite() -> None:
    p = tree({"A": (0, ["A", "B"]), "B": (2, [])}, "A")
    assert occurrence_class(p, "A") == Count.infinity()
    assert occurrence_class(p, "B") == Count.infinity()
    assert colour_count(p, 2) == Count.infinity()
    assert colour_count(p, 3) == Count.nat(0)


def test_root_occurs_once_without_cycle() -> None:
    p = tree({"A": (0, ["B"]), "B": (2, ["B"])}, "A")
    assert occurrence_class(p, "A") == Count.nat(1)
    assert occurrence_class(p, "B") == Count.infinity()


def test_occurrence_class_of_unknown_state() -> None:
    with pytest.raises(UnknownStateError):
        occurrence_class(tree({"A": (2, ["A"])}, "A"), "Z")


def test_inf_states_are_closed_upward() -> None:
    """A state inherits Inf_k from any descendant that has it."""

    p = tree({"R": (0, ["A"]), "A": (0, ["A", "B"]), "B": (2, [])}, "R")
    assert inf_states(p, 2) == frozenset({"R", "A"})
    assert inf_states(p, 3) == frozenset()


def test_subtree_counts_below_a_finite_branch() -> None:
    ctx = AutomatonAnalysis.from_presentation(tree({"A": (0, ["A", "B"]), "B": (2, ["C", "C"]), "C": (3, [])}, "A"))
    assert ctx.subtree_count("B", 3) == Count.nat(2)
    assert ctx.subtree_count("B", 2) == Count.nat(1)
    assert ctx.subtree_count("A", 3) == Count.infinity()


@settings(max_examples=500, deadline=None)
@given(regular_automata())
def test_cyclic_states_see_zero_or_infinitely_many(p) -> None:
    """Below a state on a cycle every colour occurs never or infinitely often."""

    ctx = AutomatonAnalysis.from_presentation(p)
    for state in ctx.cyclic:
        for colour in p.palette.colours:
            count = ctx.subtree_count(state, colour)
            assert count.is_infinite or count.finite == 0


@settings(max_examples=200, deadline=None)
@given(regular_automata())
def test_colour_counts_agree_with_unfolding(p) -> None:
    """Finite counts are reached within |S| levels; infinite ones keep growing past 2|S|."""

    size = len(p.states)
    for colour in p.palette.colours:
        count = colour_count(p, colour)
        near = _colour_up_to(p, colour, size)
        if count.is_infinite:
            assert _colour_up_to(p, colour, 2 * size) > near
        else:
            assert count.finite == near == _colour_up_to(p, colour, 2 * size)


@settings(max_examples=200, deadline=None)
@given(finite_graphs())
def test_graph_s2xs1_count_is_vertices_plus_cycle_rank(g) -> None:
    assert colour_count(g, 1).finite == sum(1 for c in g.vertices.values() if c == 1) + betti(g)
    assert betti(g) >= 0
