"""Parser and serializer for `.m3s` presentation documents."""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from connsum.errors import (
    DslSyntaxError,
    DslValidationError,
    DuplicateIdError,
    InvalidSpecError,
    PresentationError,
    get_component_logger,
)
from connsum.presentation import validate_finite, validate_regular
from connsum.realize import validate_spec
from connsum.schemas import (
    DocumentKind,
    EndSpaceSpec,
    FiniteGraphPresentation,
    Palette,
    PrefixAutomaton,
    RegularTreeAutomaton,
    SourceDocument,
    TreeState,
    ValidatedFinite,
    ValidatedRegular,
    ValidatedSpec,
)

logger = get_component_logger("textio")

Parsed = ValidatedFinite | ValidatedRegular | ValidatedSpec

TOKEN_PATTERN = re.compile(
    r"(?P<comment>\#[^\n]*)"
    r"|(?P<newline>\n)"
    r"|(?P<space>[ \t\r\f\v]+)"
    r"|(?P<arrow>->)"
    r"|(?P<int>[0-9]+)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_.']*)"
    r"|(?P<punct>[{}\[\];:,=])"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int

    def shown(self) -> str:
        return "end of input" if self.kind == "eof" else self.text


def tokens(text: str) -> Iterator[Token]:
    """Split a document into tokens with 1-based positions; comments and blanks are dropped."""

    line, line_start, position = 1, 0, 0
    while position < len(text):
        match = TOKEN_PATTERN.match(text, position)
        if match is None:
            raise DslSyntaxError(line, position - line_start + 1, "a token", text[position])
        kind = match.lastgroup
        if kind == "newline":
            line, line_start = line + 1, match.end()
        elif kind not in ("comment", "space"):
            value = match.group()
            yield Token(kind if kind != "punct" else value, value, line, position - line_start + 1)
        position = match.end()
    yield Token("eof", "", line, position - line_start + 1)


class Parser:
    """Recursive-descent parser over one document's token list."""

    def __init__(self, text: str) -> None:
        self.tokens = list(tokens(text))
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def fail(self, expected: str) -> DslSyntaxError:
        token = self.current
        return DslSyntaxError(token.line, token.column, expected, token.shown())

    def expect(self, kind: str, expected: str | None = None) -> Token:
        token = self.current
        if token.kind != kind:
            raise self.fail(expected or repr(kind))
        self.index += 1
        return token

    def accept(self, kind: str) -> bool:
        if self.current.kind == kind:
            self.index += 1
            return True
        return False

    def at_keyword(self, word: str, following: str) -> bool:
        return self.current.kind == "id" and self.current.text == word and self.peek().kind == following

    def integer(self) -> int:
        return int(self.expect("int", "an integer").text)

    def identifier(self) -> str:
        return self.expect("id", "an identifier").text

    def id_list(self) -> list[str]:
        self.expect("[")
        items: list[str] = []
        if not self.accept("]"):
            items.append(self.identifier())
            while self.accept(","):
                items.append(self.identifier())
            self.expect("]", "',' or ']'")
        return items

    def palette(self, seen: Optional[list[str]], keyword: Token) -> list[str]:
        if seen is not None:
            raise DuplicateIdError("palette", keyword.line, keyword.column)
        labels = self.id_list()
        self.expect(";")
        return labels

    # documents

    def document(self) -> tuple[DocumentKind, object]:
        head = self.current
        kinds = {kind.value: kind for kind in DocumentKind}
        if head.kind != "id" or head.text not in kinds:
            raise self.fail("'graph', 'tree' or 'endspace'")
        self.index += 1
        kind = kinds[head.text]
        self.expect("{")
        body = {
            DocumentKind.FINITE_GRAPH: self.graph_body,
            DocumentKind.REGULAR_TREE: self.tree_body,
            DocumentKind.ENDSPACE_SPEC: self.endspace_body,
        }[kind]()
        self.expect("eof", "end of input")
        return kind, body

    def graph_body(self) -> dict:
        labels: Optional[list[str]] = None
        vertices: dict[str, int] = {}
        edges: list[tuple[str, str]] = []
        while True:
            token = self.current
            if self.accept("}"):
                break
            if self.at_keyword("palette", "["):
                self.index += 1
                labels = self.palette(labels, token)
            elif self.at_keyword("edge", "id"):
                self.index += 1
                edges.append((self.identifier(), self.identifier()))
                self.expect(";")
            elif token.kind == "id":
                vertex = self.identifier()
                if vertex in vertices:
                    raise DuplicateIdError(vertex, token.line, token.column)
                self.expect(":")
                vertices[vertex] = self.integer()
                self.expect(";")
            else:
                raise self.fail("a statement or '}'")
        if labels is None:
            raise DslSyntaxError(token.line, token.column, "a palette statement", token.shown())
        return {"labels": labels, "vertices": vertices, "edges": edges}

    def tree_body(self) -> dict:
        labels: Optional[list[str]] = None
        root: Optional[str] = None
        states: dict[str, tuple[int, list[str]]] = {}
        while True:
            token = self.current
            if self.accept("}"):
                break
            if self.at_keyword("palette", "["):
                self.index += 1
                labels = self.palette(labels, token)
            elif self.at_keyword("root", "id"):
                self.index += 1
                if root is not None:
                    raise DuplicateIdError("root", token.line, token.column)
                root = self.identifier()
                self.expect(";")
            elif token.kind == "id":
                state = self.identifier()
                if state in states:
                    raise DuplicateIdError(state, token.line, token.column)
                self.expect(":")
                colour = self.integer()
                self.expect("arrow", "'->'")
                states[state] = (colour, self.id_list())
                self.expect(";")
            else:
                raise self.fail("a statement or '}'")
        if labels is None or root is None:
            missing = "a palette statement" if labels is None else "a root statement"
            raise DslSyntaxError(token.line, token.column, missing, token.shown())
        return {"labels": labels, "root": root, "states": states}

    def endspace_body(self) -> dict:
        labels: Optional[list[str]] = None
        automaton: Optional[dict] = None
        subsets: dict[int, list[tuple[Optional[str], int]]] = {}
        counts: dict[int, int] = {}
        while True:
            token = self.current
            if self.accept("}"):
                break
            if self.at_keyword("palette", "["):
                self.index += 1
                labels = self.palette(labels, token)
            elif self.at_keyword("E", "{"):
                self.index += 1
                if automaton is not None:
                    raise DuplicateIdError("E", token.line, token.column)
                automaton = self.prefix_automaton()
                self.accept(";")
            elif self.at_keyword("subset", "int"):
                self.index += 1
                colour_token = self.current
                colour = self.integer()
                if colour in subsets:
                    raise DuplicateIdError(f"subset {colour}", colour_token.line, colour_token.column)
                subsets[colour] = self.subset_block()
                self.accept(";")
            elif self.at_keyword("count", "int"):
                self.index += 1
                colour_token = self.current
                colour = self.integer()
                if colour in counts:
                    raise DuplicateIdError(f"count {colour}", colour_token.line, colour_token.column)
                self.expect("=")
                counts[colour] = self.integer()
                self.expect(";")
            else:
                raise self.fail("'palette', 'E', 'subset', 'count' or '}'")
        if labels is None or automaton is None:
            missing = "a palette statement" if labels is None else "an E block"
            raise DslSyntaxError(token.line, token.column, missing, token.shown())
        return {"labels": labels, "automaton": automaton, "subsets": subsets, "counts": counts}

    def prefix_automaton(self) -> dict:
        self.expect("{")
        root: Optional[str] = None
        transitions: dict[str, dict[int, str]] = {}
        while True:
            token = self.current
            if self.accept("}"):
                break
            if self.at_keyword("root", "id"):
                self.index += 1
                if root is not None:
                    raise DuplicateIdError("root", token.line, token.column)
                root = self.identifier()
                self.expect(";")
            elif token.kind == "id":
                state = self.identifier()
                self.expect(":")
                symbol = self.integer()
                if symbol in transitions.get(state, {}):
                    raise DuplicateIdError(f"{state}:{symbol}", token.line, token.column)
                self.expect("arrow", "'->'")
                transitions.setdefault(state, {})[symbol] = self.identifier()
                self.expect(";")
            else:
                raise self.fail("'root', a transition or '}'")
        return {"root": root, "transitions": transitions}

    def subset_block(self) -> list[tuple[Optional[str], int]]:
        self.expect("{")
        entries: list[tuple[Optional[str], int]] = []
        while True:
            token = self.current
            if self.accept("}"):
                break
            if not (token.kind == "id" and token.text == "allow"):
                raise self.fail("'allow' or '}'")
            self.index += 1
            state = self.identifier() if self.current.kind == "id" else None
            entry = (state, self.integer())
            if entry in entries:
                label = f"allow {state} {entry[1]}" if state else f"allow {entry[1]}"
                raise DuplicateIdError(label, token.line, token.column)
            entries.append(entry)
            self.expect(";")
        return entries


def _allow_key(entry: tuple[Optional[str], int]) -> tuple[bool, str, int]:
    state, symbol = entry
    return (state is not None, state or "", symbol)


def _build(kind: DocumentKind, body: dict) -> Parsed:
    palette = Palette(labels=tuple(body["labels"]))
    if kind is DocumentKind.FINITE_GRAPH:
        raw = FiniteGraphPresentation(palette=palette, vertices=body["vertices"], edges=body["edges"])
        return validate_finite(raw)
    if kind is DocumentKind.REGULAR_TREE:
        states = {
            state: TreeState(colour=colour, children=dict(Counter(children)))
            for state, (colour, children) in body["states"].items()
        }
        return validate_regular(RegularTreeAutomaton(palette=palette, states=states, root=body["root"]))
    spec = EndSpaceSpec(
        palette=palette,
        automaton=PrefixAutomaton(**body["automaton"]),
        subsets={colour: tuple(sorted(entries, key=_allow_key)) for colour, entries in body["subsets"].items()},
        finite_counts=body["counts"],
    )
    return validate_spec(spec)


def detect_kind(text: str) -> DocumentKind:
    """Document kind from the leading keyword."""

    head = next(tokens(text))
    for kind in DocumentKind:
        if head.kind == "id" and head.text == kind.value:
            return kind
    raise DslSyntaxError(head.line, head.column, "'graph', 'tree' or 'endspace'", head.shown())


def parse(doc: SourceDocument | str) -> Parsed:
    """Parse and validate one document.

    Args:
        doc (SourceDocument | str): Document or raw text.

    Returns:
        ValidatedFinite | ValidatedRegular | ValidatedSpec: The validated value.
    """

    text = doc.text if isinstance(doc, SourceDocument) else doc
    kind, body = Parser(text).document()
    if isinstance(doc, SourceDocument) and doc.kind is not kind:
        raise DslSyntaxError(1, 1, f"a {doc.kind.value} document", kind.value)
    try:
        value = _build(kind, body)
    except (PresentationError, InvalidSpecError, ValidationError) as exc:
        raise DslValidationError(exc) from exc
    logger.debug("Document parsed", kind=kind.value)
    return value


def load(path: str | Path) -> Parsed:
    """Read a UTF-8 `.m3s` file and parse it."""

    text = Path(path).read_text(encoding="utf-8")
    return parse(SourceDocument(text=text, kind=detect_kind(text)))


def _palette_text(palette: Palette) -> str:
    return f"palette [{', '.join(palette.labels)}];"


def serialize(value: Parsed) -> str:
    """Canonical one-line text of a parsed value, ids sorted, terminated by LF."""

    if isinstance(value, FiniteGraphPresentation):
        parts = [_palette_text(value.palette)]
        parts += [f"{vertex}: {value.vertices[vertex]};" for vertex in sorted(value.vertices)]
        parts += [f"edge {a} {b};" for a, b in value.edges]
        return f"graph {{ {' '.join(parts)} }}\n"
    if isinstance(value, RegularTreeAutomaton):
        parts = [_palette_text(value.palette), f"root {value.root};"]
        for state in sorted(value.states):
            spec = value.states[state]
            parts.append(f"{state}: {spec.colour} -> [{', '.join(spec.expanded_children())}];")
        return f"tree {{ {' '.join(parts)} }}\n"

    automaton = value.automaton
    inner: list[str] = []
    if automaton.root is not None:
        inner.append(f"root {automaton.root};")
    for state in sorted(automaton.transitions):
        for symbol, target in sorted(automaton.transitions[state].items()):
            inner.append(f"{state}: {symbol} -> {target};")
    parts = [_palette_text(value.palette), f"E {{ {' '.join(inner)} }}".replace("{  }", "{ }")]
    for colour in sorted(value.subsets):
        allows = [
            f"allow {symbol};" if state is None else f"allow {state} {symbol};"
            for state, symbol in sorted(value.subsets[colour], key=_allow_key)
        ]
        parts.append(f"subset {colour} {{ {' '.join(allows)} }}".replace("{  }", "{ }"))
    parts += [f"count {colour} = {amount};" for colour, amount in sorted(value.finite_counts.items())]
    return f"endspace {{ {' '.join(parts)} }}\n"
