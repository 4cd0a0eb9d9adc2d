"""Parsing, error positions and canonical serialization of `.m3s` documents."""

from __future__ import annotations

import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import endspace_specs, finite_graphs, graph, regular_automata, spec, tree
from connsum.errors import (
    BadColourIndexError,
    DslError,
    DslSyntaxError,
    DslValidationError,
    DuplicateIdError,
    InvalidSpecError,
)
from connsum.schemas import DocumentKind, SourceDocument, ValidatedFinite, ValidatedRegular, ValidatedSpec
from connsum.textio import detect_kind, load, parse, serialize


def test_parse_multiline_tree_with_comments() -> None:
    text = """
    # comb with finitely many teeth per level
    tree {
      palette [S3, S2xS1, P2];
      root A;   # start here
      A: 0 -> [A, B];
      B: 2 -> [];
    }
    """
    p = parse(text)
    assert isinstance(p, ValidatedRegular)
    assert p.root == "A"
    assert p.states["A"].children == {"A": 1, "B": 1}
    assert p.finite_states == frozenset({"B"})


def test_parse_graph_with_repeated_edges() -> None:
    g = parse("graph { palette [S3, S2xS1, P2]; v0: 2; v1: 0; edge v0 v1; edge v1 v0; edge v1 v1; }")
    assert isinstance(g, ValidatedFinite)
    assert g.edges == (("v0", "v1"), ("v0", "v1"), ("v1", "v1"))


def test_parse_endspace_document(examples_dir) -> None:
    value = load(examples_dir / "left_ray.m3s")
    assert isinstance(value, ValidatedSpec)
    assert value.automaton.transitions == {"S": {0: "S", 1: "S"}}
    assert value.subsets == {2: ((None, 0),)}
    assert value.finite_counts == {3: 2}
    assert value.live_subsets[2] == frozenset({("S", 0)})


def test_empty_end_space_document() -> None:
    value = parse("endspace { palette [S3, S2xS1]; E { } }")
    assert value.automaton.root is None
    assert value.subsets == {}


def test_keywords_may_name_vertices() -> None:
    g = parse("graph { palette [S3, S2xS1]; palette: 1; edge palette palette; }")
    assert g.vertices == {"palette": 1}


def test_detect_kind() -> None:
    assert detect_kind("# lead\ntree { }") is DocumentKind.REGULAR_TREE
    with pytest.raises(DslSyntaxError):
        detect_kind("manifold { }")


def test_source_document_kind_must_match() -> None:
    with pytest.raises(DslSyntaxError):
        parse(SourceDocument(text="graph { palette [S3, S2xS1]; v0: 0; }", kind=DocumentKind.REGULAR_TREE))


def test_missing_arrow_reports_position() -> None:
    with pytest.raises(DslSyntaxError) as exc_info:
        parse("tree { palette [S3, S2xS1]; root A; A: 0 [A]; }")
    error = exc_info.value
    assert (error.line, error.column) == (1, 42)
    assert error.expected == "'->'"
    assert error.found == "["


def test_error_line_counts_newlines() -> None:
    with pytest.raises(DslSyntaxError) as exc_info:
        parse("tree {\n  palette [S3, S2xS1];\n  root A;\n  A: 0 -> [A]\n}")
    assert (exc_info.value.line, exc_info.value.column) == (5, 1)
    assert exc_info.value.found == "}"


def test_unexpected_character() -> None:
    with pytest.raises(DslSyntaxError) as exc_info:
        parse("graph { palette [S3, S2xS1]; v0: 0 @ }")
    assert exc_info.value.found == "@"


def test_truncated_input() -> None:
    with pytest.raises(DslSyntaxError) as exc_info:
        parse("graph { palette [S3, S2xS1];")
    assert exc_info.value.found == "end of input"


@pytest.mark.parametrize(
    ("text", "missing"),
    [
        ("graph { v0: 0; }", "a palette statement"),
        ("tree { palette [S3, S2xS1]; A: 0 -> [A]; }", "a root statement"),
        ("endspace { palette [S3, S2xS1]; }", "an E block"),
    ],
)
def test_missing_required_statements(text: str, missing: str) -> None:
    with pytest.raises(DslSyntaxError) as exc_info:
        parse(text)
    assert exc_info.value.expected == missing


@pytest.mark.parametrize(
    ("text", "identifier"),
    [
        ("graph { palette [S3, S2xS1]; v0: 0; v0: 1; }", "v0"),
        ("graph { palette [S3]; palette [S3]; v0: 0; }", "palette"),
        ("tree { palette [S3, S2xS1]; root A; root A; A: 0 -> [A]; }", "root"),
        ("endspace { palette [S3, S2xS1, P2]; E { root S; S: 0 -> S; S: 0 -> S; } }", "S:0"),
        ("endspace { palette [S3, S2xS1, P2]; E { } E { } }", "E"),
        ("endspace { palette [S3, S2xS1, P2]; E { } subset 2 { allow 0; allow 0; } }", "allow 0"),
        ("endspace { palette [S3, S2xS1, P2]; E { } count 2 = 1; count 2 = 3; }", "count 2"),
    ],
)
def test_duplicate_declarations(text: str, identifier: str) -> None:
    with pytest.raises(DuplicateIdError) as exc_info:
        parse(text)
    assert exc_info.value.identifier == identifier


def test_validation_failures_are_wrapped() -> None:
    with pytest.raises(DslValidationError) as exc_info:
        parse("graph { palette [S3]; v0: 5; }")
    assert isinstance(exc_info.value.cause, BadColourIndexError)
    assert "BadColourIndex(v0)" in str(exc_info.value)


def test_invalid_specification_is_wrapped() -> None:
    with pytest.raises(DslValidationError) as exc_info:
        parse("endspace { palette [S3, S2xS1]; E { root S; S: 0 -> D; } }")
    assert isinstance(exc_info.value.cause, InvalidSpecError)


def test_reserved_palette_order_is_enforced() -> None:
    with pytest.raises(DslValidationError):
        parse("graph { palette [S2xS1, S3]; v0: 0; }")


def test_serialize_graph() -> None:
    text = serialize(graph({"v1": 3, "v0": 2}, [("v1", "v0")]))
    assert text == "graph { palette [S3, S2xS1, P2, P3]; v0: 2; v1: 3; edge v0 v1; }\n"


def test_serialize_tree() -> None:
    text = serialize(tree({"A": (0, ["B", "A", "B"]), "B": (2, [])}, "A"))
    assert text == "tree { palette [S3, S2xS1, P2, P3]; root A; A: 0 -> [A, B, B]; B: 2 -> []; }\n"


def test_serialize_endspace() -> None:
    value = spec({"S": {0: "S"}}, "S", subsets={2: [("S", 0), (None, 0)]}, counts={3: 2})
    assert serialize(value) == (
        "endspace { palette [S3, S2xS1, P2, P3]; E { root S; S: 0 -> S; } "
        "subset 2 { allow 0; allow S 0; } count 3 = 2; }\n"
    )
    assert serialize(spec({}, None)) == "endspace { palette [S3, S2xS1, P2, P3]; E { } }\n"


def test_every_example_document_loads(examples_dir) -> None:
    for path in sorted(examples_dir.glob("*.m3s")):
        value = load(path)
        assert parse(serialize(value)) == value


@settings(max_examples=200, deadline=None)
@given(finite_graphs())
def test_graph_text_round_trip(g) -> None:
    assert parse(serialize(g)) == g


@settings(max_examples=200, deadline=None)
@given(regular_automata())
def test_tree_text_round_trip(p) -> None:
    assert parse(serialize(p)) == p


@settings(max_examples=200, deadline=None)
@given(endspace_specs())
def test_endspace_text_round_trip(value) -> None:
    text = serialize(value)
    assert parse(text) == value
    assert serialize(parse(text)) == text


documents = st.one_of(finite_graphs(max_vertices=4), regular_automata(max_states=4), endspace_specs(max_states=3))
PUNCTUATION = re.compile(r"->|[{}\[\];:,=]")
TOKEN_START = re.compile(r"->|[{}\[\];:,=]|[A-Za-z0-9_.']+")


def _multiline(value) -> str:
    return serialize(value).replace("; ", ";\n  ")


def _offset(text: str, line: int, column: int) -> int:
    return sum(len(row) + 1 for row in text.split("\n")[: line - 1]) + column - 1


@settings(max_examples=300, deadline=None)
@given(documents, st.data())
def test_stray_character_is_reported_where_it_stands(value, data) -> None:
    text = _multiline(value)
    at = data.draw(st.integers(min_value=0, max_value=len(text)))
    if text[at - 1 : at + 1] == "->":
        at -= 1
    mutated = text[:at] + "@" + text[at:]
    with pytest.raises(DslSyntaxError) as exc_info:
        parse(mutated)
    error = exc_info.value
    assert error.found == "@"
    assert _offset(mutated, error.line, error.column) == at


@settings(max_examples=300, deadline=None)
@given(documents, st.data())
def test_dropped_punctuation_is_reported_at_or_after_the_gap(value, data) -> None:
    text = _multiline(value)
    marks = list(PUNCTUATION.finditer(text))
    mark = data.draw(st.sampled_from(marks))
    mutated = text[: mark.start()] + text[mark.end() :]
    try:
        parse(mutated)
    except DslSyntaxError as error:
        offset = _offset(mutated, error.line, error.column)
        previous = max((m.start() for m in TOKEN_START.finditer(text) if m.start() < mark.start()), default=0)
        assert offset >= previous
        if error.found == "end of input":
            assert mutated[offset:].strip() == ""
        else:
            assert mutated[offset:].startswith(error.found)
    except DslError:
        pass
