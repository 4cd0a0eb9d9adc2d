"""Good truncations of regular presentations and the bounded back-and-forth matcher."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import networkx as nx

from connsum.analysis import AutomatonAnalysis
from connsum.config import get_settings
from connsum.decide import first_difference, invariant_report
from connsum.errors import PaletteMismatchError, UnfoldLimitError, get_component_logger
from connsum.schemas import (
    Absorption,
    BoundaryLeaf,
    FiniteTree,
    LeafGroup,
    MatchingStage,
    Obstruction,
    ObstructionKind,
    PartialMatching,
    Signature,
    TreeNode,
    Truncation,
    ValidatedRegular,
)
from connsum.utils import format_signature, format_signature_multiset, graph_to_dot, timed

logger = get_component_logger("exhaust")

GROUPING_LEAF_LIMIT = 400
Side = str


class _Context:
    """Per-presentation goodness and flag lookups shared by all depths."""

    def __init__(self, p: ValidatedRegular) -> None:
        self.p = p
        self.analysis = AutomatonAnalysis.from_presentation(p)
        self._good: dict[str, bool] = {}
        self._flags: dict[str, Signature] = {}

    def good(self, state: str) -> bool:
        """Every colour count of the continuation below `state` is 0 or infinity."""

        if state not in self._good:
            colour = self.p.states[state].colour
            verdict = True
            for k in self.p.palette.colours:
                count = self.analysis.subtree_count(state, k)
                if not count.is_infinite and count.finite - (colour == k) != 0:
                    verdict = False
                    break
            self._good[state] = verdict
        return self._good[state]

    def flags(self, state: str) -> Signature:
        if state not in self._flags:
            self._flags[state] = tuple(k for k in self.p.palette.colours if state in self.analysis.inf_states(k))
        return self._flags[state]

    def is_leaf(self, state: str, level: int, depth: int) -> bool:
        return state in self.analysis.live and level >= depth and self.good(state)


@dataclass(frozen=True)
class _Profile:
    """Truncation summary by state vectors: core colour counts and boundary states."""

    depth: int
    interior: Counter
    leaves: Counter
    nodes: int

    def flag_multiset(self, ctx: _Context) -> Counter:
        found: Counter = Counter()
        for state, count in self.leaves.items():
            found[ctx.flags(state)] += count
        return found


def _profile(ctx: _Context, depth: int) -> _Profile:
    colours = range(len(ctx.p.palette))
    interior: Counter = Counter()
    leaves: Counter = Counter()
    frontier = Counter({ctx.p.root: 1})
    level = 0
    while frontier:
        following: Counter = Counter()
        for state, count in frontier.items():
            if state not in ctx.analysis.live:
                for colour in colours:
                    interior[colour] += ctx.analysis.subtree_count(state, colour).finite * count
                continue
            interior[ctx.p.states[state].colour] += count
            if ctx.is_leaf(state, level, depth):
                leaves[state] += count
                continue
            for child, multiplicity in ctx.p.states[state].children.items():
                following[child] += count * multiplicity
        frontier = following
        level += 1
    return _Profile(depth=depth, interior=interior, leaves=leaves, nodes=sum(interior.values()))


def _materialize(ctx: _Context, depth: int) -> Truncation:
    p = ctx.p
    nodes: dict[str, TreeNode] = {}
    boundary: list[BoundaryLeaf] = []
    deepest_live = deepest = 0
    stack = [("0", p.root, 0)]
    while stack:
        node, state, level = stack.pop()
        spec = p.states[state]
        deepest = max(deepest, level)
        if state in ctx.analysis.live:
            deepest_live = max(deepest_live, level)
        if ctx.is_leaf(state, level, depth):
            boundary.append(BoundaryLeaf(node=node, state=state, flags=ctx.flags(state)))
            nodes[node] = TreeNode(colour=spec.colour, state=state)
            continue
        kids = tuple(f"{node}.{index}" for index in range(sum(spec.children.values())))
        for child_node, child_state in zip(kids, spec.expanded_children()):
            stack.append((child_node, child_state, level + 1))
        nodes[node] = TreeNode(colour=spec.colour, state=state, children=kids)

    closed = p.root not in ctx.analysis.live
    boundary.sort(key=lambda leaf: [int(part) for part in leaf.node.split(".")])
    return Truncation(
        core=FiniteTree(nodes=nodes, root="0"),
        boundary=tuple(boundary),
        depth=depth,
        max_depth=deepest if closed else deepest_live,
        closed_manifold=closed,
    )


def _check_size(profile: _Profile) -> None:
    limit = get_settings().UNFOLD_NODE_LIMIT
    if profile.nodes > limit:
        raise UnfoldLimitError(f"truncation at depth {profile.depth} needs {profile.nodes} nodes (limit {limit})")


def truncate(p: ValidatedRegular, depth: int) -> Truncation:
    """Cut the generated tree into a good finite core and live boundary leaves.

    Live vertices below `depth` are expanded; from `depth` on, a live vertex becomes a
    boundary leaf once its continuation holds 0 or infinitely many vertices of every
    colour, and is expanded otherwise. Finite subtrees are kept whole in the core.
    A finite generated tree is returned in full with `closed_manifold` set.

    Args:
        p (ValidatedRegular): Valid automaton.
        depth (int): Requested depth, at least 0.

    Returns:
        Truncation: Core, boundary leaves in path order, and the depth actually reached.
    """

    if depth < 0:
        raise ValueError(f"depth must be nonnegative, got {depth}")
    ctx = _Context(p)
    _check_size(_profile(ctx, depth))
    return _materialize(ctx, depth)


def to_dot(truncation: Truncation, name: str = "core") -> str:
    """GraphViz text for a truncation core; boundary leaves are drawn as boxes."""

    leaves = {leaf.node: leaf for leaf in truncation.boundary}
    graph = nx.DiGraph(name=name)
    for node_id, node in sorted(truncation.core.nodes.items()):
        attrs = {"label": f"{node_id}:{node.colour}"}
        if node_id in leaves:
            attrs["shape"] = "box"
            attrs["label"] = f"{node_id}:{node.colour}/{format_signature(leaves[node_id].flags)}"
        graph.add_node(node_id, **attrs)
        for child in node.children:
            graph.add_edge(node_id, child)
    return graph_to_dot(graph)


def _minimal_covers(target: Signature, available: tuple[Signature, ...]) -> list[tuple[Signature, ...]]:
    """Inclusion-minimal sets of distinct flag vectors whose union is `target`."""

    candidates = [flags for flags in available if set(flags) <= set(target)]
    covers: list[tuple[Signature, ...]] = []
    for size in range(1, len(candidates) + 1):
        for combo in combinations(candidates, size):
            union = set().union(*map(set, combo))
            if union != set(target):
                continue
            if any(set(cover) <= set(combo) for cover in covers):
                continue
            covers.append(combo)
    return covers


def _group_plan(leaders: Counter, followers: Counter) -> list[tuple[Signature, Counter]] | None:
    """Assign follower flag vectors to leader leaves so each group's union is the leader's flags.

    Returns one (leader flags, follower multiset) per leader leaf, or None.
    """

    order: list[Signature] = sorted(leaders.elements(), key=lambda flags: (-len(flags), flags))
    if len(order) > GROUPING_LEAF_LIMIT:
        return None

    @lru_cache(maxsize=None)
    def search(index: int, remaining: tuple[tuple[Signature, int], ...]) -> tuple | None:
        pool = Counter(dict(remaining))
        if index == len(order):
            # Leftover followers join any leader whose flags contain theirs.
            if all(any(set(flags) <= set(leader) for leader in order) for flags in pool.elements()):
                return ()
            return None
        target = order[index]
        for cover in _minimal_covers(target, tuple(sorted(pool))):
            rest = pool - Counter(cover)
            tail = search(index + 1, tuple(sorted(rest.items())))
            if tail is not None:
                return (cover, *tail)
        return None

    covers = search(0, tuple(sorted(followers.items())))
    if covers is None:
        return None

    plan = [(leader, Counter(cover)) for leader, cover in zip(order, covers)]
    leftover = followers - sum((group for _, group in plan), Counter())
    for flags in sorted(leftover.elements()):
        for leader, group in plan:
            if set(flags) <= set(leader):
                group[flags] += 1
                break
    return plan


@dataclass(frozen=True)
class _Plan:
    bijective: bool
    groups: list[tuple[Signature, Counter]]
    absorptions: list[tuple[int, int, Side]]


def _plan(
    leader: Side, left: _Profile, right: _Profile, left_ctx: _Context, right_ctx: _Context
) -> _Plan | None:
    left_flags, right_flags = left.flag_multiset(left_ctx), right.flag_multiset(right_ctx)

    absorptions: list[tuple[int, int, Side]] = []
    for k in left_ctx.p.palette.colours:
        surplus = left.interior[k] - right.interior[k]
        if surplus == 0:
            continue
        deficient, flags = ("right", right_flags) if surplus > 0 else ("left", left_flags)
        if not any(k in vector for vector in flags):
            return None
        absorptions.append((k, abs(surplus), deficient))

    if left_flags == right_flags:
        return _Plan(bijective=True, groups=[], absorptions=absorptions)
    leaders, followers = (left_flags, right_flags) if leader == "left" else (right_flags, left_flags)
    groups = _group_plan(leaders, followers)
    if groups is None:
        return None
    return _Plan(bijective=False, groups=groups, absorptions=absorptions)


def _stage(
    index: int, leader: Side, plan: _Plan, left: Truncation, right: Truncation
) -> MatchingStage:
    """Turn a flag-level plan into concrete leaf groups, absorptions and interior pairs."""

    lead, follow = (left, right) if leader == "left" else (right, left)
    groups: list[LeafGroup] = []
    if plan.bijective:
        graph = nx.Graph()
        top = [("L", leaf.node) for leaf in lead.boundary]
        graph.add_nodes_from(top)
        graph.add_nodes_from(("F", leaf.node) for leaf in follow.boundary)
        for a in lead.boundary:
            for b in follow.boundary:
                if a.flags == b.flags:
                    graph.add_edge(("L", a.node), ("F", b.node))
        pairs = nx.bipartite.hopcroft_karp_matching(graph, top_nodes=top)
        flags_of = {leaf.node: leaf.flags for leaf in lead.boundary}
        for _, node in top:
            groups.append(LeafGroup(leader_leaf=node, follower_leaves=(pairs[("L", node)][1],), flags=flags_of[node]))
    else:
        pool: dict[Signature, list[str]] = {}
        for leaf in follow.boundary:
            pool.setdefault(leaf.flags, []).append(leaf.node)
        by_flags: dict[Signature, list[str]] = {}
        for leaf in lead.boundary:
            by_flags.setdefault(leaf.flags, []).append(leaf.node)
        for flags, members in plan.groups:
            leader_leaf = by_flags[flags].pop(0)
            chosen = tuple(pool[vector].pop(0) for vector in sorted(members.elements()))
            groups.append(LeafGroup(leader_leaf=leader_leaf, follower_leaves=chosen, flags=flags))
        groups.sort(key=lambda group: [int(part) for part in group.leader_leaf.split(".")])

    absorptions = []
    for colour, amount, side in plan.absorptions:
        host = left if side == "left" else right
        leaf = next(leaf.node for leaf in host.boundary if colour in leaf.flags)
        absorptions.append(Absorption(colour=colour, amount=amount, side=side, leaf=leaf))

    interior_pairs: list[tuple[str, str]] = []
    for colour in left.core.colour_counts().keys() | right.core.colour_counts().keys():
        if colour == 0:
            continue
        ours = sorted(node for node, spec in left.core.nodes.items() if spec.colour == colour)
        theirs = sorted(node for node, spec in right.core.nodes.items() if spec.colour == colour)
        interior_pairs.extend(zip(ours, theirs))

    return MatchingStage(
        index=index,
        leader=leader,
        left_depth=left.depth,
        right_depth=right.depth,
        bijective=plan.bijective,
        groups=tuple(groups),
        interior_pairs=tuple(sorted(interior_pairs)),
        absorptions=tuple(absorptions),
    )


@timed("exhaust")
def back_and_forth(p1: ValidatedRegular, p2: ValidatedRegular, depth: int) -> PartialMatching | Obstruction:
    """Alternately deepen both truncations and keep their boundaries matched.

    Stage i lets the left side lead when i is even and the right side otherwise. The
    leader truncates at depth >= i, the follower at least as deep as before, and the
    smallest depth pair within the configured window that admits a flag-respecting
    leaf matching (with colour surpluses absorbed by flagged leaves) is taken.

    Args:
        p1 (ValidatedRegular): Left presentation.
        p2 (ValidatedRegular): Right presentation over the same palette.
        depth (int): Last stage index.

    Returns:
        PartialMatching | Obstruction: The stages on success; otherwise a sound
        invariant mismatch or an inconclusive depth exhaustion.
    """

    if p1.palette.labels != p2.palette.labels:
        raise PaletteMismatchError(p1.palette.labels, p2.palette.labels)

    settings = get_settings()
    window = settings.MATCHER_DEPTH_WINDOW or len(p1.states) + len(p2.states)
    contexts = {"left": _Context(p1), "right": _Context(p2)}
    profiles: dict[tuple[Side, int], _Profile] = {}

    def profile(side: Side, d: int) -> _Profile:
        if (side, d) not in profiles:
            profiles[(side, d)] = _profile(contexts[side], d)
        return profiles[(side, d)]

    previous = {"left": 0, "right": 0}
    stages: list[MatchingStage] = []
    for index in range(depth + 1):
        leader = "left" if index % 2 == 0 else "right"
        follower = "right" if leader == "left" else "left"
        lead_low = max(index, previous[leader])
        follow_low = previous[follower]
        candidates = sorted(
            (
                (lead_depth, follow_depth)
                for lead_depth in range(lead_low, lead_low + window + 1)
                for follow_depth in range(follow_low, follow_low + window + 1)
            ),
            key=lambda pair: (max(pair), abs(pair[0] - pair[1]), pair[0]),
        )

        stage = None
        for lead_depth, follow_depth in candidates:
            depths = {leader: lead_depth, follower: follow_depth}
            left, right = profile("left", depths["left"]), profile("right", depths["right"])
            if max(left.nodes, right.nodes) > settings.UNFOLD_NODE_LIMIT:
                continue
            plan = _plan(leader, left, right, contexts["left"], contexts["right"])
            if plan is None:
                continue
            stage = _stage(
                index,
                leader,
                plan,
                _materialize(contexts["left"], depths["left"]),
                _materialize(contexts["right"], depths["right"]),
            )
            previous = depths
            break

        if stage is None:
            depths = {leader: lead_low, follower: follow_low}
            left_flags = profile("left", depths["left"]).flag_multiset(contexts["left"])
            right_flags = profile("right", depths["right"]).flag_multiset(contexts["right"])
            return _obstruction(index, window, p1, p2, left_flags, right_flags)
        logger.debug("Stage matched", stage=index, left_depth=stage.left_depth, right_depth=stage.right_depth)
        stages.append(stage)

    return PartialMatching(stages=tuple(stages))


def _obstruction(
    index: int, window: int, p1: ValidatedRegular, p2: ValidatedRegular, left_flags: Counter, right_flags: Counter
) -> Obstruction:
    """Classify a failed stage: sound when the automaton-level invariants differ."""

    witness = first_difference(invariant_report(p1), invariant_report(p2))
    if witness is not None:
        detail = (
            f"boundary flag-vector multisets {format_signature_multiset(left_flags.elements())} vs "
            f"{format_signature_multiset(right_flags.elements())}; {witness}"
        )
        logger.info("Matcher found an invariant mismatch", stage=index, invariant=witness.invariant)
        return Obstruction(kind=ObstructionKind.INVARIANT_MISMATCH, detail=detail, stage=index)
    detail = f"no flag-respecting matching within a depth window of {window} at stage {index}"
    logger.info("Matcher exhausted its depth window", stage=index)
    return Obstruction(kind=ObstructionKind.DEPTH_EXHAUSTED, detail=detail, stage=index)
