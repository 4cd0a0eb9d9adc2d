"""connsum data models: Pydantic v2 schemas for presentations, end spaces and verdicts."""

from __future__ import annotations

from enum import Enum
from functools import total_ordering
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator

from connsum.utils import format_signature

RESERVED_LABELS = ("S3", "S2xS1")
S3_COLOUR = 0
S2XS1_COLOUR = 1

Signature = tuple[int, ...]


class DocumentKind(str, Enum):
    """Document families of the presentation language, keyed by leading keyword."""

    FINITE_GRAPH = "graph"
    REGULAR_TREE = "tree"
    ENDSPACE_SPEC = "endspace"


class Verdict(str, Enum):
    """Three-valued answer of the isomorphism procedure."""

    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


class ObstructionKind(str, Enum):
    """Outcome classes of a failed bounded matching."""

    INVARIANT_MISMATCH = "invariant_mismatch"
    DEPTH_EXHAUSTED = "depth_exhausted"


class Frozen(BaseModel):
    """Immutable base for validated values shared across readers."""

    model_config = ConfigDict(frozen=True)


class Palette(Frozen):
    """Ordered manifold labels; index 0 is S3, index 1 is S2xS1."""

    labels: tuple[str, ...] = Field(description="Opaque labels, e.g. ('S3', 'S2xS1', 'RP3')")

    @field_validator("labels")
    @classmethod
    def _check_labels(cls, labels: tuple[str, ...]) -> tuple[str, ...]:
        if not labels:
            raise ValueError("palette needs at least the label S3")
        if len(set(labels)) != len(labels):
            raise ValueError(f"palette labels must be distinct: {list(labels)}")
        for index, reserved in enumerate(RESERVED_LABELS[: len(labels)]):
            if labels[index] != reserved:
                raise ValueError(f"palette index {index} is reserved for {reserved}, got {labels[index]}")
        return labels

    def __len__(self) -> int:
        """Number of labels, reserved ones included."""
        return len(self.labels)

    @property
    def is_complete(self) -> bool:
        """Whether both reserved labels S3 and S2xS1 are present."""
        return len(self.labels) >= len(RESERVED_LABELS)

    @property
    def colours(self) -> tuple[int, ...]:
        """Indices that carry a prime count (every index except S3)."""
        return tuple(range(1, len(self.labels)))

    def has_colour(self, colour: int) -> bool:
        """Whether `colour` indexes a label of this palette.

        Args:
            colour (int): Colour index to check.

        Returns:
            bool: True for 0 <= colour < len(palette).
        """

        return 0 <= colour < len(self.labels)


@total_ordering
class Count(Frozen):
    """A value of N ∪ {∞}; `finite is None` encodes infinity."""

    finite: Optional[int] = Field(default=None, ge=0)

    @classmethod
    def nat(cls, value: int) -> "Count":
        """Finite count.

        Args:
            value (int): Nonnegative integer.

        Returns:
            Count: The count `value`.
        """

        return cls(finite=value)

    @classmethod
    def infinity(cls) -> "Count":
        """The infinite count."""
        return cls(finite=None)

    @property
    def is_infinite(self) -> bool:
        return self.finite is None

    def __add__(self, other: "Count | int") -> "Count":
        """Saturating sum: anything plus infinity is infinity.

        Args:
            other (Count | int): Second summand.

        Returns:
            Count: The sum.
        """

        other = other if isinstance(other, Count) else Count.nat(other)
        if self.is_infinite or other.is_infinite:
            return Count.infinity()
        return Count.nat(self.finite + other.finite)

    __radd__ = __add__

    def __mul__(self, other: "Count | int") -> "Count":
        """Product in which 0 * infinity is 0.

        Args:
            other (Count | int): Second factor.

        Returns:
            Count: The product.
        """

        other = other if isinstance(other, Count) else Count.nat(other)
        if self.finite == 0 or other.finite == 0:
            return Count.nat(0)
        if self.is_infinite or other.is_infinite:
            return Count.infinity()
        return Count.nat(self.finite * other.finite)

    __rmul__ = __mul__

    def __lt__(self, other: "Count") -> bool:
        """Natural order with infinity above every finite count."""
        if self.is_infinite:
            return False
        if other.is_infinite:
            return True
        return self.finite < other.finite

    def __str__(self) -> str:
        return "infinity" if self.is_infinite else str(self.finite)

    def to_json(self) -> int | str:
        """JSON value: the integer, or the string `infinity`."""
        return "infinity" if self.is_infinite else self.finite


OccurrenceClass = Count


class FiniteGraphPresentation(Frozen):
    """Finite connected coloured multigraph (G, f); loops allowed."""

    palette: Palette
    vertices: dict[str, int] = Field(description="vertex id -> palette index")
    edges: tuple[tuple[str, str], ...] = Field(default=(), description="Unordered vertex pairs, loops as (v, v)")

    @field_validator("edges", mode="before")
    @classmethod
    def _normalise_edges(cls, edges: object) -> tuple[tuple[str, str], ...]:
        pairs = [tuple(sorted((str(a), str(b)))) for a, b in edges]  # type: ignore[misc]
        return tuple(sorted(pairs))

    def degree(self, vertex: str) -> int:
        return sum((a == vertex) + (b == vertex) for a, b in self.edges)


class ValidatedFinite(FiniteGraphPresentation):
    """A finite graph presentation that passed `validate_finite`."""


class TreeState(Frozen):
    """One automaton state: its colour and the multiset of child states."""

    colour: int = Field(ge=0)
    children: dict[str, PositiveInt] = Field(default_factory=dict, description="child state -> multiplicity")

    def expanded_children(self) -> list[str]:
        """Child states with repetition, sorted by state id."""
        return [child for child in sorted(self.children) for _ in range(self.children[child])]


class RegularTreeAutomaton(Frozen):
    """Finite rooted generator of a locally finite coloured tree."""

    palette: Palette
    states: dict[str, TreeState]
    root: str


class ValidatedRegular(RegularTreeAutomaton):
    """A regular tree automaton that passed `validate_regular`."""

    finite_states: frozenset[str] = Field(default=frozenset(), description="States generating finite subtrees")


class TreeNode(Frozen):
    colour: int
    state: Optional[str] = None
    children: tuple[str, ...] = ()


class FiniteTree(Frozen):
    """Rooted finite coloured tree; node ids are dotted child-index paths from `0`."""

    nodes: dict[str, TreeNode]
    root: str = "0"

    def __len__(self) -> int:
        return len(self.nodes)

    def depth(self, node: str) -> int:
        return node.count(".")

    def colour_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for node in self.nodes.values():
            counts[node.colour] = counts.get(node.colour, 0) + 1
        return counts


class EndState(Frozen):
    """A live state of an end-space automaton with its Inf_k flags."""

    flags: frozenset[int] = frozenset()
    children: dict[str, PositiveInt] = Field(default_factory=dict)


class EndSpaceAutomaton(Frozen):
    """Pruned automaton whose branch space is the end space."""

    palette: Palette
    states: dict[str, EndState] = Field(default_factory=dict)
    root: Optional[str] = None

    @property
    def is_empty(self) -> bool:
        return self.root is None


class Branch(Frozen):
    """Eventually periodic root path: `prefix` followed by `cycle` repeated forever."""

    prefix: tuple[str, ...] = ()
    cycle: tuple[str, ...] = Field(min_length=1)

    def __str__(self) -> str:
        head = "·".join(self.prefix)
        loop = "·".join(self.cycle)
        loop = f"{loop}^ω" if len(self.cycle) == 1 else f"({loop})^ω"
        return f"{head}·{loop}" if head else loop


class Stratum(Frozen):
    """Topological summary of the ends carrying exactly one signature."""

    signature: Signature
    occupied: bool = True
    isolated: bool = False
    perfect: bool = False
    cb_rank: int = 0
    top_degree: Count = Field(default_factory=lambda: Count.nat(0))

    def describe(self) -> str:
        parts: list[str] = []
        if self.perfect and not self.isolated and self.cb_rank == 0:
            return "perfect"
        if self.isolated:
            parts.append("isolated")
        if self.perfect:
            parts.append("perfect")
        if self.cb_rank:
            parts.append(f"rank {self.cb_rank}")
            parts.append(f"degree {self.top_degree}")
        return ", ".join(parts)


class InvariantTable(Frozen):
    """Per-signature strata of the coloured end space; unlisted signatures are unoccupied."""

    strata: tuple[Stratum, ...] = ()
    cb_rank: int = 0
    perfect_kernel: bool = False

    def stratum(self, signature: Signature) -> Stratum:
        for stratum in self.strata:
            if stratum.signature == tuple(sorted(signature)):
                return stratum
        return Stratum(signature=tuple(sorted(signature)), occupied=False)

    def describe(self) -> str:
        if not self.strata:
            return "{}"
        return "{" + "; ".join(f"{format_signature(s.signature)}: {s.describe()}" for s in self.strata) + "}"

    def to_json(self) -> dict:
        return {
            format_signature(s.signature): {
                "isolated": s.isolated,
                "perfect": s.perfect,
                "cb_rank": s.cb_rank,
                "top_degree": s.top_degree.to_json(),
            }
            for s in self.strata
        }


class CanonicalEndForm(Frozen):
    """Minimized end automaton (states `q<n>`) plus its invariant table."""

    automaton: EndSpaceAutomaton
    table: InvariantTable


class InvariantReport(Frozen):
    """Complete invariant: prime counts plus the coloured end-space summary."""

    n: dict[int, Count]
    end_count: Count
    signatures: Optional[tuple[Signature, ...]] = None
    table: InvariantTable = Field(default_factory=InvariantTable)

    @property
    def closed(self) -> bool:
        return self.end_count == Count.nat(0)


class Witness(Frozen):
    """A concrete invariant on which two presentations differ."""

    invariant: str
    left: str
    right: str

    def __str__(self) -> str:
        return f"{self.invariant} {self.left} vs {self.right}"


class IsoVerdict(Frozen):
    verdict: Verdict
    tier: int = Field(ge=1, le=3)
    witness: Optional[Witness] = None
    explanation: Optional[str] = None


class BoundaryLeaf(Frozen):
    node: str
    state: str
    flags: Signature


class Truncation(Frozen):
    """Good finite core of an unfolding and its live boundary leaves."""

    core: FiniteTree
    boundary: tuple[BoundaryLeaf, ...] = ()
    depth: int = Field(ge=0, description="Requested depth")
    max_depth: int = Field(ge=0, description="Depth of the deepest core vertex on a live path")
    closed_manifold: bool = False


class LeafGroup(Frozen):
    """A leader boundary leaf and the follower leaves standing for it."""

    leader_leaf: str
    follower_leaves: tuple[str, ...]
    flags: Signature


class Absorption(Frozen):
    """Surplus interior vertices of one colour assigned to a flagged leaf on the other side."""

    colour: int
    amount: int = Field(ge=1)
    side: Literal["left", "right"]
    leaf: str


class MatchingStage(Frozen):
    index: int
    leader: Literal["left", "right"]
    left_depth: int
    right_depth: int
    bijective: bool
    groups: tuple[LeafGroup, ...] = ()
    interior_pairs: tuple[tuple[str, str], ...] = ()
    absorptions: tuple[Absorption, ...] = ()


class PartialMatching(Frozen):
    stages: tuple[MatchingStage, ...]


class Obstruction(Frozen):
    kind: ObstructionKind
    detail: str
    stage: int


class PrefixAutomaton(Frozen):
    """Deterministic binary prefix automaton; `root is None` presents the empty space."""

    root: Optional[str] = None
    transitions: dict[str, dict[int, str]] = Field(default_factory=dict)

    @property
    def states(self) -> set[str]:
        found = set(self.transitions)
        for moves in self.transitions.values():
            found.update(moves.values())
        if self.root is not None:
            found.add(self.root)
        return found


class EndSpaceSpec(Frozen):
    """Prescribed end space E, closed subsets E_i and finite prime counts."""

    palette: Palette
    automaton: PrefixAutomaton = Field(default_factory=PrefixAutomaton)
    subsets: dict[int, tuple[tuple[Optional[str], int], ...]] = Field(
        default_factory=dict, description="colour -> allowed (state or None for every state, symbol)"
    )
    finite_counts: dict[int, int] = Field(default_factory=dict)


class ValidatedSpec(EndSpaceSpec):
    """An end-space specification with each E_i pruned to its live transitions."""

    live_subsets: dict[int, frozenset[tuple[str, int]]] = Field(default_factory=dict)


class SourceDocument(Frozen):
    text: str
    kind: DocumentKind
