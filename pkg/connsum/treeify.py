"""Normalization of finite graph presentations to finite trees with S2xS1 leaves."""

from __future__ import annotations

from collections import Counter

import networkx as nx

from connsum.errors import get_component_logger
from connsum.presentation import multigraph, validate_regular
from connsum.schemas import (
    S2XS1_COLOUR,
    RegularTreeAutomaton,
    TreeState,
    ValidatedFinite,
    ValidatedRegular,
)

logger = get_component_logger("treeify")


def _handle_name(anchor: str, index: int, taken: set[str]) -> str:
    name = f"{anchor}_handle{index}"
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def treeify(g: ValidatedFinite | ValidatedRegular) -> ValidatedRegular:
    """Replace every surplus edge of a connected multigraph by an S2xS1 leaf.

    The spanning tree comes from a breadth-first search out of the least vertex id,
    visiting neighbours in sorted order. Each non-tree edge (loops included) becomes a
    new colour-1 state hanging as a leaf from its least endpoint. Automata are trees
    already and are returned unchanged.

    Args:
        g (ValidatedFinite | ValidatedRegular): Valid presentation.

    Returns:
        ValidatedRegular: Automaton generating a finite tree with one state per vertex.
    """

    if isinstance(g, ValidatedRegular):
        return g

    graph = multigraph(g)
    root = min(g.vertices)
    simple = nx.Graph(graph)
    tree_edges = list(nx.bfs_edges(simple, root, sort_neighbors=sorted))

    children: dict[str, Counter] = {vertex: Counter() for vertex in g.vertices}
    surplus = Counter(g.edges)
    for parent, child in tree_edges:
        children[parent][child] += 1
        surplus[tuple(sorted((parent, child)))] -= 1

    taken = set(g.vertices)
    states: dict[str, TreeState] = {}
    handles = Counter()
    for (a, b), count in sorted(surplus.items()):
        for _ in range(count):
            anchor = min(a, b)
            name = _handle_name(anchor, handles[anchor], taken)
            handles[anchor] += 1
            children[anchor][name] += 1
            states[name] = TreeState(colour=S2XS1_COLOUR)

    for vertex, colour in g.vertices.items():
        states[vertex] = TreeState(colour=colour, children=dict(children[vertex]))

    logger.debug("Graph normalized", vertices=len(g.vertices), handles=sum(handles.values()))
    return validate_regular(RegularTreeAutomaton(palette=g.palette, states=states, root=root))
