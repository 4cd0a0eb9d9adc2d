"""Coloured end space of a regular presentation: branch automaton, counting, canonical form."""

from __future__ import annotations

from collections import Counter, defaultdict

import networkx as nx

from connsum.analysis import AutomatonAnalysis
from connsum.errors import InfinitelyManyEndsError, get_component_logger
from connsum.presentation import live_states, reachability_graph
from connsum.schemas import (
    Branch,
    CanonicalEndForm,
    Count,
    EndSpaceAutomaton,
    EndState,
    InvariantTable,
    Signature,
    Stratum,
    ValidatedRegular,
)
from connsum.utils import format_signature, graph_to_dot, timed

logger = get_component_logger("endspace")

Children = dict[str, Counter]


def end_space(p: ValidatedRegular, analysis: AutomatonAnalysis | None = None) -> EndSpaceAutomaton:
    """Prune finite states and flag every live state with its Inf_k colours.

    Args:
        p (ValidatedRegular): Valid automaton.
        analysis (AutomatonAnalysis | None): Optional shared analysis context for `p`.

    Returns:
        EndSpaceAutomaton: Empty exactly when the generated tree is finite.
    """

    ctx = analysis or AutomatonAnalysis.from_presentation(p)
    if p.root not in ctx.live:
        return EndSpaceAutomaton(palette=p.palette)

    states: dict[str, EndState] = {}
    for state in sorted(ctx.live):
        flags = frozenset(k for k in p.palette.colours if state in ctx.inf_states(k))
        kids = {child: m for child, m in p.states[state].children.items() if child in ctx.live}
        states[state] = EndState(flags=flags, children=kids)
    return EndSpaceAutomaton(palette=p.palette, states=states, root=p.root)


def _analysis(e: EndSpaceAutomaton) -> AutomatonAnalysis:
    return AutomatonAnalysis(
        {state: spec.children for state, spec in e.states.items()},
        {state: 0 for state in e.states},
        e.root,
    )


def end_count(e: EndSpaceAutomaton) -> Count:
    """Number of ends: infinite iff a branching state recurs infinitely often.

    Args:
        e (EndSpaceAutomaton): End-space automaton.

    Returns:
        Count: Exact end count, or infinity.
    """

    if e.is_empty:
        return Count.nat(0)
    ctx = _analysis(e)
    for state, spec in e.states.items():
        if sum(spec.children.values()) >= 2 and ctx.occurrences[state].is_infinite:
            return Count.infinity()

    memo: dict[str, int] = {}

    def ends_below(state: str) -> int:
        if state not in memo:
            if state in ctx.cyclic:
                memo[state] = 1
            else:
                memo[state] = sum(m * ends_below(child) for child, m in e.states[state].children.items())
        return memo[state]

    return Count.nat(ends_below(e.root))


def enumerate_ends(e: EndSpaceAutomaton) -> list[tuple[Branch, frozenset[int]]]:
    """List one eventually periodic branch per end together with its signature.

    Args:
        e (EndSpaceAutomaton): End-space automaton with finitely many ends.

    Returns:
        list[tuple[Branch, frozenset[int]]]: Branches in child-sorted order; parallel
        children give repeated entries.
    """

    if end_count(e).is_infinite:
        raise InfinitelyManyEndsError()
    if e.is_empty:
        return []
    ctx = _analysis(e)
    found: list[tuple[Branch, frozenset[int]]] = []

    def walk(state: str, prefix: tuple[str, ...]) -> None:
        if state in ctx.cyclic:
            cycle = [state]
            successor = next(iter(e.states[state].children))
            while successor != state:
                cycle.append(successor)
                successor = next(iter(e.states[successor].children))
            signature = frozenset.intersection(*(e.states[s].flags for s in (*prefix, *cycle)))
            found.append((Branch(prefix=prefix, cycle=tuple(cycle)), signature))
            return
        spec = e.states[state]
        for child in sorted(spec.children):
            for _ in range(spec.children[child]):
                walk(child, (*prefix, state))

    walk(e.root, ())
    return found


def _single_end_signature(children: Children, flags: dict[str, frozenset[int]], state: str) -> Signature:
    seen: set[str] = set()
    while state not in seen:
        seen.add(state)
        state = next(iter(children[state]))
    return tuple(sorted(flags[state]))


def _invariant_table(children: Children, flags: dict[str, frozenset[int]], root: str) -> InvariantTable:
    """Per-signature Cantor–Bendixson analysis by iterated removal of single-end states.

    A state is thin when exactly one end passes below it; the ends through thin states
    are the isolated points of the current derived space. Removing thin states and
    pruning yields the next derivative, until no thin state is left (the perfect kernel).
    """

    occupied = {tuple(sorted(flags[s])) for s in AutomatonAnalysis(children, {}, root).cyclic}
    rounds: list[dict[Signature, Count]] = []
    perfect: set[Signature] = set()
    current: Children | None = {s: Counter(kids) for s, kids in children.items()}

    while current:
        ctx = AutomatonAnalysis(current, {}, root)
        seeds = {s for s, kids in current.items() if sum(kids.values()) >= 2}
        branching = set(seeds)
        for state in seeds:
            branching.update(nx.ancestors(ctx.graph, state))
        thin = set(current) - branching
        if not thin:
            perfect = {tuple(sorted(flags[s])) for s in ctx.cyclic}
            break

        removed: dict[Signature, Count] = defaultdict(lambda: Count.nat(0))
        if root in thin:
            removed[_single_end_signature(current, flags, root)] += 1
        else:
            for parent in sorted(branching):
                for child, m in current[parent].items():
                    if child in thin:
                        signature = _single_end_signature(current, flags, child)
                        removed[signature] = removed[signature] + ctx.occurrences[parent] * m
        rounds.append(dict(removed))

        remaining = {s: Counter({c: m for c, m in current[s].items() if c not in thin}) for s in branching}
        alive = live_states(reachability_graph(remaining))
        if root not in alive:
            current = None
        else:
            current = {s: Counter({c: m for c, m in remaining[s].items() if c in alive}) for s in alive}

    strata: list[Stratum] = []
    for signature in sorted(occupied):
        ranks = [r for r, removed in enumerate(rounds) if signature in removed]
        strata.append(
            Stratum(
                signature=signature,
                isolated=bool(rounds) and signature in rounds[0],
                perfect=signature in perfect,
                cb_rank=max(ranks) + 1 if ranks else 0,
                top_degree=rounds[max(ranks)][signature] if ranks else Count.nat(0),
            )
        )
    return InvariantTable(strata=tuple(strata), cb_rank=len(rounds), perfect_kernel=bool(perfect))


def _children_of(e: EndSpaceAutomaton) -> tuple[Children, dict[str, frozenset[int]]]:
    children = {s: Counter(spec.children) for s, spec in e.states.items()}
    flags = {s: spec.flags for s, spec in e.states.items()}
    return children, flags


def topo_invariants(e: EndSpaceAutomaton) -> InvariantTable:
    """Invariant table of the coloured end space, computed without minimization."""

    if e.is_empty:
        return InvariantTable()
    children, flags = _children_of(e)
    return _invariant_table(children, flags, e.root)


def _contract_unary(children: Children, flags: dict[str, frozenset[int]], root: str) -> tuple[str, bool]:
    """Merge states with a single child of multiplicity 1 and equal flags into that child."""

    changed = False
    while True:
        target = None
        for state in sorted(children):
            kids = children[state]
            if len(kids) == 1:
                (child, multiplicity), = kids.items()
                if multiplicity == 1 and child != state and flags[child] == flags[state]:
                    target = (state, child)
                    break
        if target is None:
            return root, changed
        state, child = target
        del children[state]
        for kids in children.values():
            if state in kids:
                kids[child] += kids.pop(state)
        if root == state:
            root = child
        changed = True


def _refine(children: Children, flags: dict[str, frozenset[int]]) -> dict[str, int]:
    """Coarsest flag-respecting bisimulation, numbered canonically by sorted class keys."""

    keys0 = {s: tuple(sorted(flags[s])) for s in children}
    order = sorted(set(keys0.values()))
    ids = {s: order.index(keys0[s]) for s in children}
    while True:
        keys = {}
        for state, kids in children.items():
            grouped: Counter = Counter()
            for child, m in kids.items():
                grouped[ids[child]] += m
            keys[state] = (ids[state], tuple(sorted(grouped.items())))
        order = sorted(set(keys.values()))
        refined = {s: order.index(keys[s]) for s in children}
        if len(order) == len(set(ids.values())):
            return refined
        ids = refined


@timed("endspace")
def canonical_form(e: EndSpaceAutomaton) -> CanonicalEndForm:
    """Contract unary steps, quotient by bisimulation, and attach the invariant table.

    Args:
        e (EndSpaceAutomaton): End-space automaton.

    Returns:
        CanonicalEndForm: Minimized automaton with canonical state names `q<n>`.
    """

    if e.is_empty:
        return CanonicalEndForm(automaton=EndSpaceAutomaton(palette=e.palette), table=InvariantTable())

    children, flags = _children_of(e)
    root = e.root
    while True:
        root, contracted = _contract_unary(children, flags, root)
        ids = _refine(children, flags)
        quotient: Children = {}
        quotient_flags: dict[str, frozenset[int]] = {}
        for state, kids in children.items():
            name = f"q{ids[state]}"
            if name in quotient:
                continue
            grouped: Counter = Counter()
            for child, m in kids.items():
                grouped[f"q{ids[child]}"] += m
            quotient[name] = grouped
            quotient_flags[name] = flags[state]
        merged = len(quotient) < len(children)
        renamed = set(quotient) != set(children)
        children, flags, root = quotient, quotient_flags, f"q{ids[root]}"
        if not (contracted or merged or renamed):
            break

    automaton = EndSpaceAutomaton(
        palette=e.palette,
        states={s: EndState(flags=flags[s], children=dict(children[s])) for s in sorted(children)},
        root=root,
    )
    logger.debug("Canonical form computed", states_in=len(e.states), states_out=len(children))
    return CanonicalEndForm(automaton=automaton, table=_invariant_table(children, flags, root))


def to_dot(value: EndSpaceAutomaton | CanonicalEndForm, name: str = "ends") -> str:
    """GraphViz text with nodes labelled `state/colourflags`."""

    automaton = value.automaton if isinstance(value, CanonicalEndForm) else value
    graph = nx.MultiDiGraph(name=name)
    for state, spec in automaton.states.items():
        attrs = {"label": f"{state}/{format_signature(spec.flags)}"}
        if state == automaton.root:
            attrs["shape"] = "doublecircle"
        graph.add_node(state, **attrs)
        for child, m in sorted(spec.children.items()):
            graph.add_edge(state, child, label=f"×{m}" if m > 1 else "")
    return graph_to_dot(graph)
