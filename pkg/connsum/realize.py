"""Tree presentations realizing a prescribed coloured end space and finite prime counts."""

from __future__ import annotations

from collections import Counter, deque

import networkx as nx

from connsum.config import get_settings
from connsum.decide import invariant_report
from connsum.endspace import end_count
from connsum.errors import InvalidSpecError, RealizationError, get_component_logger
from connsum.presentation import live_states, reachability_graph, validate_regular
from connsum.schemas import (
    S3_COLOUR,
    Count,
    EndSpaceAutomaton,
    EndSpaceSpec,
    EndState,
    PrefixAutomaton,
    RegularTreeAutomaton,
    TreeState,
    ValidatedRegular,
    ValidatedSpec,
)
from connsum.utils import format_signature_multiset, timed

logger = get_component_logger("realize")

SYMBOLS = (0, 1)


def _live_within(automaton: PrefixAutomaton, allowed: set[tuple[str, int]]) -> set[str]:
    children = {state: {} for state in automaton.states}
    for state, symbol in allowed:
        target = automaton.transitions[state][symbol]
        children[state][target] = children[state].get(target, 0) + 1
    return live_states(reachability_graph(children))


def validate_spec(spec: EndSpaceSpec) -> ValidatedSpec:
    """Check an end-space specification and prune each subset to its live transitions.

    Args:
        spec (EndSpaceSpec): Unchecked specification.

    Returns:
        ValidatedSpec: The specification with `live_subsets` per subset colour.
    """

    size = len(spec.palette)
    if not spec.palette.is_complete:
        raise InvalidSpecError("palette lacks the reserved labels S3, S2xS1")

    automaton = spec.automaton
    if automaton.root is None and automaton.transitions:
        raise InvalidSpecError("E has transitions but no root")
    for state, moves in sorted(automaton.transitions.items()):
        for symbol in moves:
            if symbol not in SYMBOLS:
                raise InvalidSpecError(f"transition {state} --{symbol}--> uses a symbol outside {{0, 1}}")
    everything = {(state, symbol) for state, moves in automaton.transitions.items() for symbol in moves}
    live = _live_within(automaton, everything)
    dead = sorted(automaton.states - live)
    if dead:
        raise InvalidSpecError(f"dead state {dead[0]} begins no infinite path")

    clash = sorted(set(spec.subsets) & set(spec.finite_counts))
    if clash:
        raise InvalidSpecError(f"index clash: colour {clash[0]} is both a subset and a finite count")
    for colour in sorted(spec.subsets):
        if not 2 <= colour < size:
            raise InvalidSpecError(f"subset colour {colour} must lie in 2..{size - 1}")
    for colour, amount in sorted(spec.finite_counts.items()):
        if not 1 <= colour < size:
            raise InvalidSpecError(f"count colour {colour} must lie in 1..{size - 1}")
        if amount < 0:
            raise InvalidSpecError(f"count {colour} = {amount} is negative")

    live_subsets: dict[int, frozenset[tuple[str, int]]] = {}
    for colour, entries in sorted(spec.subsets.items()):
        allowed: set[tuple[str, int]] = set()
        for state, symbol in entries:
            if state is None:
                allowed.update((s, b) for s, b in everything if b == symbol)
            elif (state, symbol) in everything:
                allowed.add((state, symbol))
            else:
                raise InvalidSpecError(f"subset {colour} allows unknown transition {state} --{symbol}-->")
        alive = _live_within(automaton, allowed)
        live_subsets[colour] = frozenset(
            (state, symbol)
            for state, symbol in allowed
            if state in alive and automaton.transitions[state][symbol] in alive
        )

    return ValidatedSpec(**spec.model_dump(), live_subsets=live_subsets)


@timed("realize")
def realize(spec: EndSpaceSpec) -> ValidatedRegular:
    """Build the prefix tree of E with coloured leaves marking membership in each E_i.

    Product states pair an E-state with the set of subsets the current prefix still
    extends into; each such subset i contributes one colour-i leaf. Finite counts hang
    from the root as one chain per colour. The output has at most
    |E| * 2^s + s + sum(n_j) + 1 states for s subsets.

    Args:
        spec (EndSpaceSpec): End-space specification.

    Returns:
        ValidatedRegular: Regular automaton whose invariants reproduce the specification.

    Raises:
        InvalidSpecError: The finite counts need more chain states than `UNFOLD_NODE_LIMIT`.
        RealizationError: The recomputed invariants of the output disagree with `spec`.
    """

    checked = spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)
    automaton = checked.automaton
    states: dict[str, TreeState] = {}

    limit = get_settings().UNFOLD_NODE_LIMIT
    chain_total = sum(checked.finite_counts.values())
    if chain_total > limit:
        raise InvalidSpecError(f"finite counts need {chain_total} chain states (limit {limit})")

    chain_heads: Counter = Counter()
    for colour, amount in sorted(checked.finite_counts.items()):
        for position in range(1, amount + 1):
            name = f"C{colour}_{position}"
            following = {f"C{colour}_{position + 1}": 1} if position < amount else {}
            states[name] = TreeState(colour=colour, children=following)
        if amount:
            chain_heads[f"C{colour}_1"] += 1

    if automaton.root is None:
        states["P0"] = TreeState(colour=S3_COLOUR, children=dict(chain_heads))
        result = validate_regular(RegularTreeAutomaton(palette=checked.palette, states=states, root="P0"))
        _verify_realization(result, checked)
        return result

    def alive_at(state: str) -> frozenset[int]:
        return frozenset(
            colour
            for colour, moves in checked.live_subsets.items()
            if any(source == state for source, _ in moves)
        )

    start = (automaton.root, alive_at(automaton.root))
    names = {start: "P0"}
    queue = deque([start])
    while queue:
        product = queue.popleft()
        state, alive = product
        kids: Counter = Counter()
        for symbol in SYMBOLS:
            target = automaton.transitions.get(state, {}).get(symbol)
            if target is None:
                continue
            following = frozenset(c for c in alive if (state, symbol) in checked.live_subsets[c])
            successor = (target, following)
            if successor not in names:
                names[successor] = f"P{len(names)}"
                queue.append(successor)
            kids[names[successor]] += 1
        for colour in sorted(alive):
            kids[f"L{colour}"] += 1
            states.setdefault(f"L{colour}", TreeState(colour=colour))
        states[names[product]] = TreeState(colour=S3_COLOUR, children=dict(kids))

    root = "P0"
    if chain_heads:
        # The chains must hang from the root vertex only; a recurring start state gets a copy.
        recurring = any("P0" in node.children for node in states.values())
        root = "R" if recurring else "P0"
        kids = Counter(states["P0"].children)
        kids.update(chain_heads)
        states[root] = TreeState(colour=S3_COLOUR, children=dict(kids))

    result = validate_regular(RegularTreeAutomaton(palette=checked.palette, states=states, root=root))
    _verify_realization(result, checked)
    logger.debug("Specification realized", product_states=len(names), states=len(states))
    return result


def _expected_ends(spec: ValidatedSpec) -> tuple[Count, Counter | None]:
    """End count of E and, when it is finite, the multiset of prescribed signatures."""

    automaton = spec.automaton
    graph = reachability_graph({state: dict(Counter(moves.values())) for state, moves in automaton.transitions.items()})
    reachable = nx.descendants(graph, automaton.root) | {automaton.root}
    shadow = EndSpaceAutomaton(
        palette=spec.palette,
        states={state: EndState(children=dict(Counter(automaton.transitions[state].values()))) for state in reachable},
        root=automaton.root,
    )
    count = end_count(shadow)
    if count.is_infinite:
        return count, None

    # With finitely many ends every cycle of E has a single exit, so each walk closes one end.
    signatures: Counter = Counter()

    def walk(state: str, path: tuple[str, ...], used: frozenset[tuple[str, int]]) -> None:
        for symbol, target in sorted(automaton.transitions[state].items()):
            moves = used | {(state, symbol)}
            if target == state or target in path:
                signatures[tuple(sorted(c for c, live in spec.live_subsets.items() if moves <= live))] += 1
            else:
                walk(target, (*path, state), moves)

    walk(automaton.root, (), frozenset())
    return count, signatures


def _verify_realization(result: ValidatedRegular, spec: ValidatedSpec) -> None:
    """Recompute the invariants of `result` and raise unless they are the prescribed ones."""

    report = invariant_report(result)
    for colour in sorted(spec.subsets):
        nonempty = spec.automaton.root in {source for source, _ in spec.live_subsets[colour]}
        if report.n[colour].is_infinite != nonempty:
            expected = "infinity" if nonempty else "0"
            raise RealizationError(f"n({colour}) is {report.n[colour]}, expected {expected}")
    for colour, amount in sorted(spec.finite_counts.items()):
        if report.n[colour] != Count.nat(amount):
            raise RealizationError(f"n({colour}) is {report.n[colour]}, expected {amount}")

    if spec.automaton.root is None:
        count, signatures = Count.nat(0), Counter()
    else:
        count, signatures = _expected_ends(spec)
    if report.end_count != count:
        raise RealizationError(f"end count is {report.end_count}, expected {count}")
    if signatures is not None and Counter(report.signatures or ()) != signatures:
        raise RealizationError(
            f"end signatures are {format_signature_multiset(report.signatures or ())}, "
            f"expected {format_signature_multiset(signatures.elements())}"
        )
