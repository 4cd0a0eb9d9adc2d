"""Validation and finite unfolding of coloured graph and regular tree presentations."""

from __future__ import annotations

from collections import Counter

import networkx as nx

from connsum.config import get_settings
from connsum.errors import (
    BadColourIndexError,
    DisconnectedError,
    EmptyGraphError,
    IncompletePaletteError,
    UnfoldLimitError,
    UnknownStateError,
    UnknownVertexError,
    UnreachableStateError,
    get_component_logger,
)
from connsum.schemas import (
    FiniteGraphPresentation,
    FiniteTree,
    Palette,
    RegularTreeAutomaton,
    TreeNode,
    ValidatedFinite,
    ValidatedRegular,
)

logger = get_component_logger("presentation")


def _require_complete(palette: Palette) -> None:
    if not palette.is_complete:
        raise IncompletePaletteError(
            f"IncompletePalette: [{', '.join(palette.labels)}] lacks the reserved labels S3, S2xS1"
        )


def multigraph(presentation: FiniteGraphPresentation) -> nx.MultiGraph:
    """Build the underlying networkx multigraph, one parallel edge per edge entry.

    Args:
        presentation (FiniteGraphPresentation): Graph presentation with known vertices.

    Returns:
        nx.MultiGraph: Vertices carry a `colour` attribute; loops are self-edges.
    """

    graph = nx.MultiGraph()
    for vertex, colour in presentation.vertices.items():
        graph.add_node(vertex, colour=colour)
    graph.add_edges_from(presentation.edges)
    return graph


def validate_finite(raw: FiniteGraphPresentation) -> ValidatedFinite:
    """Check a finite graph presentation and mark it valid.

    Args:
        raw (FiniteGraphPresentation): Unchecked presentation.

    Returns:
        ValidatedFinite: Same vertices and edge multiset, marked valid.
    """

    if not raw.vertices:
        raise EmptyGraphError()
    for vertex in sorted(raw.vertices):
        colour = raw.vertices[vertex]
        if not raw.palette.has_colour(colour):
            raise BadColourIndexError(vertex, colour, len(raw.palette))
    _require_complete(raw.palette)
    for a, b in raw.edges:
        for endpoint in (a, b):
            if endpoint not in raw.vertices:
                raise UnknownVertexError(endpoint)

    graph = multigraph(raw)
    components = list(nx.connected_components(graph))
    if len(components) > 1:
        raise DisconnectedError(components)

    logger.debug("Finite presentation valid", vertices=len(raw.vertices), edges=len(raw.edges))
    return ValidatedFinite(palette=raw.palette, vertices=raw.vertices, edges=raw.edges)


def reachability_graph(children: dict[str, dict[str, int]]) -> nx.DiGraph:
    """Directed graph with s -> t whenever t occurs in the child multiset of s.

    Args:
        children (dict[str, dict[str, int]]): state -> child multiplicities.

    Returns:
        nx.DiGraph: Edges carry the multiplicity as `weight`.
    """

    graph = nx.DiGraph()
    graph.add_nodes_from(children)
    for state, kids in children.items():
        for child, multiplicity in kids.items():
            if multiplicity >= 1:
                graph.add_edge(state, child, weight=multiplicity)
    return graph


def cyclic_states(graph: nx.DiGraph) -> set[str]:
    """States lying on a directed cycle (nontrivial SCC member or self-loop)."""

    cyclic: set[str] = set()
    for component in nx.strongly_connected_components(graph):
        if len(component) > 1:
            cyclic.update(component)
    cyclic.update(node for node, _ in nx.selfloop_edges(graph))
    return cyclic


def live_states(graph: nx.DiGraph) -> set[str]:
    """States generating an infinite subtree: those that reach a cycle."""

    live = cyclic_states(graph)
    for state in list(live):
        live.update(nx.ancestors(graph, state))
    return live


def validate_regular(raw: RegularTreeAutomaton) -> ValidatedRegular:
    """Check reachability and colours of an automaton and record its finite states.

    Args:
        raw (RegularTreeAutomaton): Unchecked automaton.

    Returns:
        ValidatedRegular: The automaton with `finite_states` metadata.
    """

    if raw.root not in raw.states:
        raise UnknownStateError(raw.root)
    for state in sorted(raw.states):
        spec = raw.states[state]
        if not raw.palette.has_colour(spec.colour):
            raise BadColourIndexError(state, spec.colour, len(raw.palette))
        for child in spec.children:
            if child not in raw.states:
                raise UnknownStateError(child)
    _require_complete(raw.palette)

    graph = reachability_graph({state: dict(spec.children) for state, spec in raw.states.items()})
    reachable = nx.descendants(graph, raw.root) | {raw.root}
    unreachable = sorted(set(raw.states) - reachable)
    if unreachable:
        raise UnreachableStateError(unreachable[0])

    finite = frozenset(set(raw.states) - live_states(graph))
    logger.debug("Regular presentation valid", states=len(raw.states), finite_states=len(finite))
    return ValidatedRegular(palette=raw.palette, states=raw.states, root=raw.root, finite_states=finite)


def level_sizes(p: RegularTreeAutomaton, depth: int, start: str | None = None) -> list[int]:
    """Number of tree vertices at each depth 0..depth, by multiplicity-weighted state vectors."""

    frontier = Counter({start or p.root: 1})
    sizes: list[int] = []
    for _ in range(depth + 1):
        sizes.append(sum(frontier.values()))
        following: Counter[str] = Counter()
        for state, count in frontier.items():
            for child, multiplicity in p.states[state].children.items():
                following[child] += count * multiplicity
        frontier = following
    return sizes


def unfold(p: ValidatedRegular, depth: int) -> FiniteTree:
    """Materialize the depth-`depth` truncation of the generated tree.

    Args:
        p (ValidatedRegular): Valid automaton.
        depth (int): Maximal distance from the root, at least 0.

    Returns:
        FiniteTree: Vertices at distance <= depth with colours inherited from states.
    """

    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    limit = get_settings().UNFOLD_NODE_LIMIT
    total = sum(level_sizes(p, depth))
    if total > limit:
        raise UnfoldLimitError(f"unfolding to depth {depth} needs {total} nodes (limit {limit})")

    nodes: dict[str, TreeNode] = {}
    stack = [("0", p.root, 0)]
    while stack:
        node, state, level = stack.pop()
        spec = p.states[state]
        kids: tuple[str, ...] = ()
        if level < depth:
            kids = tuple(f"{node}.{index}" for index in range(sum(spec.children.values())))
            for child_node, child_state in zip(kids, spec.expanded_children()):
                stack.append((child_node, child_state, level + 1))
        nodes[node] = TreeNode(colour=spec.colour, state=state, children=kids)
    return FiniteTree(nodes=nodes, root="0")
