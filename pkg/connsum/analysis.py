"""Occurrence and cycle analysis of regular presentations; prime counts n_k."""

from __future__ import annotations

from collections.abc import Mapping
from functools import cached_property

import networkx as nx

from connsum.errors import BadColourIndexError, ReservedColourError, UnknownStateError
from connsum.presentation import cyclic_states, live_states, reachability_graph
from connsum.schemas import (
    S2XS1_COLOUR,
    Count,
    OccurrenceClass,
    RegularTreeAutomaton,
    ValidatedFinite,
    ValidatedRegular,
)


class AutomatonAnalysis:
    """Memoized reachability facts for one automaton-shaped structure.

    The structure is given as child multisets, colours and a root, so the same
    context serves tree automata and pruned end-space automata. Memo tables live
    on the instance and are never shared between contexts.

    Args:
        children (Mapping[str, Mapping[str, int]]): state -> child multiplicities.
        colours (Mapping[str, int]): state -> palette index.
        root (str): Root state.
    """

    def __init__(self, children: Mapping[str, Mapping[str, int]], colours: Mapping[str, int], root: str) -> None:
        self.children = {state: dict(kids) for state, kids in children.items()}
        self.colours = dict(colours)
        self.root = root
        self._inf: dict[int, frozenset[str]] = {}
        self._subtree: dict[tuple[str, int], Count] = {}

    @classmethod
    def from_presentation(cls, p: RegularTreeAutomaton) -> "AutomatonAnalysis":
        return cls(
            {state: spec.children for state, spec in p.states.items()},
            {state: spec.colour for state, spec in p.states.items()},
            p.root,
        )

    @cached_property
    def graph(self) -> nx.DiGraph:
        return reachability_graph(self.children)

    @cached_property
    def reachable(self) -> frozenset[str]:
        return frozenset(nx.descendants(self.graph, self.root) | {self.root})

    @cached_property
    def cyclic(self) -> frozenset[str]:
        return frozenset(cyclic_states(self.graph))

    @cached_property
    def live(self) -> frozenset[str]:
        """States whose generated subtree is infinite."""
        return frozenset(live_states(self.graph))

    @cached_property
    def occurrences(self) -> dict[str, Count]:
        """Number of vertices of the generated tree carrying each state."""

        infinite: set[str] = set()
        for state in self.cyclic & self.reachable:
            infinite.add(state)
            infinite.update(nx.descendants(self.graph, state))

        finite = [state for state in self.reachable if state not in infinite]
        counts = {state: 0 for state in finite}
        if self.root in counts:
            counts[self.root] = 1
        for state in nx.topological_sort(self.graph.subgraph(finite)):
            for child, multiplicity in self.children[state].items():
                if child in counts:
                    counts[child] += counts[state] * multiplicity

        result = {state: Count.nat(0) for state in self.children}
        result.update({state: Count.nat(value) for state, value in counts.items()})
        result.update({state: Count.infinity() for state in infinite})
        return result

    def inf_states(self, colour: int) -> frozenset[str]:
        """States whose subtree holds infinitely many vertices of `colour`."""

        if colour not in self._inf:
            targets = {state for state, c in self.colours.items() if c == colour}
            reaching = set(targets)
            for state in targets:
                reaching.update(nx.ancestors(self.graph, state))
            seeds = reaching & self.cyclic
            result = set(seeds)
            for state in seeds:
                result.update(nx.ancestors(self.graph, state))
            self._inf[colour] = frozenset(result)
        return self._inf[colour]

    def subtree_count(self, state: str, colour: int) -> Count:
        """Count vertices of `colour` in the subtree generated from `state`."""

        key = (state, colour)
        if key in self._subtree:
            return self._subtree[key]
        if state in self.inf_states(colour):
            value = Count.infinity()
        else:
            # Outside Inf_k no cycle below reaches the colour, so recursion follows a DAG
            # and cyclic states contribute nothing.
            value = Count.nat(1 if self.colours[state] == colour else 0)
            if state not in self.cyclic:
                for child, multiplicity in self.children[state].items():
                    value = value + self.subtree_count(child, colour) * multiplicity
        self._subtree[key] = value
        return value

    def colour_count(self, colour: int) -> Count:
        total = Count.nat(0)
        for state, c in self.colours.items():
            if c == colour:
                total = total + self.occurrences[state]
        return total


def _check_colour(colour: int, palette_size: int) -> None:
    if colour == 0:
        raise ReservedColourError()
    if not 0 < colour < palette_size:
        raise BadColourIndexError("k", colour, palette_size)


def occurrence_class(p: ValidatedRegular, state: str) -> OccurrenceClass:
    """Classify how often a state occurs in the generated tree.

    Args:
        p (ValidatedRegular): Valid automaton.
        state (str): State of `p`.

    Returns:
        OccurrenceClass: Infinite when a cycle lies upstream, else the weighted root-path count.
    """

    if state not in p.states:
        raise UnknownStateError(state)
    return AutomatonAnalysis.from_presentation(p).occurrences[state]


def betti(g: ValidatedFinite) -> int:
    """Cycle rank |E| - |V| + 1 of a connected multigraph (a loop is one edge)."""

    return len(g.edges) - len(g.vertices) + 1


def colour_count(p: ValidatedFinite | ValidatedRegular, colour: int) -> Count:
    """Prime count n_k of the presented manifold.

    For finite graphs the S2xS1 count adds the cycle rank, since every independent
    cycle of the gluing graph contributes one S2xS1 summand.

    Args:
        p (ValidatedFinite | ValidatedRegular): Valid presentation.
        colour (int): Palette index k >= 1.

    Returns:
        Count: Number of colour-k summands, possibly infinity.
    """

    _check_colour(colour, len(p.palette))
    if isinstance(p, ValidatedFinite):
        direct = sum(1 for c in p.vertices.values() if c == colour)
        if colour == S2XS1_COLOUR:
            direct += betti(p)
        return Count.nat(direct)
    return AutomatonAnalysis.from_presentation(p).colour_count(colour)


def inf_states(p: ValidatedRegular, colour: int) -> frozenset[str]:
    """States s whose subtree has infinitely many colour-k vertices (Inf_k(s))."""

    _check_colour(colour, len(p.palette))
    return AutomatonAnalysis.from_presentation(p).inf_states(colour)
