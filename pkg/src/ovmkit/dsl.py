"""Textual DSL for variability models: parser and canonical serializer.

The grammar mirrors OVM vocabulary so diagrams transcribe 1:1:

    model      ::= "model" STRING decl* ;
    decl       ::= vpdecl | constraint ;
    vpdecl     ::= ("vp" | "cp") IDENT "layer" layer "{" edge* group? "}" ;
    layer      ::= "process" | "service" | "component" ;
    edge       ::= ("mandatory" | "optional") IDENT guard? ";" ;
    group      ::= "alt" "[" INT ".." INT "]" "{" member+ "}" ;
    member     ::= IDENT guard? ";" ;
    guard      ::= "when" STRING ;
    constraint ::= IDENT ("requires" | "excludes") IDENT ";" ;

`vp` declares an internal variation point, `cp` an external one. Variants are
declared implicitly at first mention inside a VP body. Comments run from `#`
to end of line. Identifiers are [A-Za-z_][A-Za-z0-9_]*; keywords are reserved.
Parsing checks syntax only; well-formedness is the caller's separate step.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    AlternativeGroup,
    Constraint,
    ConstraintKind,
    Diagnostic,
    EdgeKind,
    Layer,
    SourceSpan,
    Variant,
    VariantEdge,
    VariabilityModel,
    VariationPoint,
    Visibility,
    has_errors,
    well_formed,
)

KEYWORDS = frozenset(
    {
        "model",
        "vp",
        "cp",
        "layer",
        "process",
        "service",
        "component",
        "mandatory",
        "optional",
        "alt",
        "when",
        "requires",
        "excludes",
    }
)

_LAYERS = {layer.value: layer for layer in Layer}
_PUNCT = {"{", "}", "[", "]", ";", ".."}
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}
_UNESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}

END_OF_INPUT = "end of input"


@dataclass(frozen=True)
class ParseError:
    span: SourceSpan
    expected: str
    found: str

    def __str__(self) -> str:
        return f"{self.span.line}:{self.span.column}: expected {self.expected}, found {self.found!r}"

    def to_json(self) -> dict:
        return {
            "line": self.span.line,
            "column": self.span.column,
            "length": self.span.length,
            "expected": self.expected,
            "found": self.found,
        }


class ParseFailure(Exception):
    """Raised when parsing fails; carries every error found before recovery gave up."""

    def __init__(self, errors: list[ParseError]):
        super().__init__("; ".join(str(e) for e in errors))
        self.errors = errors


class SerializeError(Exception):
    def __init__(self, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


@dataclass(frozen=True)
class _Token:
    type: str  # "kw" | "ident" | "int" | "string" | "punct" | "eof"
    value: str
    line: int
    column: int
    length: int

    @property
    def span(self) -> SourceSpan:
        return SourceSpan(self.line, self.column, self.length)


def _is_ident_start(ch: str) -> bool:
    return ch.isascii() and (ch.isalpha() or ch == "_")


def _is_ident_char(ch: str) -> bool:
    return ch.isascii() and (ch.isalnum() or ch == "_")


def _tokenize(text: str) -> tuple[list[_Token], list[ParseError]]:
    tokens: list[_Token] = []
    errors: list[ParseError] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                advance(1)
            continue
        start_line, start_col = line, col
        if _is_ident_start(ch):
            j = i
            while j < n and _is_ident_char(text[j]):
                j += 1
            word = text[i:j]
            advance(j - i)
            tokens.append(
                _Token("kw" if word in KEYWORDS else "ident", word, start_line, start_col, len(word))
            )
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            word = text[i:j]
            advance(j - i)
            tokens.append(_Token("int", word, start_line, start_col, len(word)))
            continue
        if ch == '"':
            advance(1)
            value = []
            closed = False
            while i < n:
                c = text[i]
                if c == '"':
                    advance(1)
                    closed = True
                    break
                if c in "\n\r":
                    break
                if c == "\\":
                    if i + 1 < n and text[i + 1] in _ESCAPES:
                        value.append(_ESCAPES[text[i + 1]])
                        advance(2)
                        continue
                    advance(1)
                    continue
                value.append(c)
                advance(1)
            if not closed:
                errors.append(
                    ParseError(SourceSpan(start_line, start_col, col - start_col), '"', "unterminated string")
                )
                continue
            tokens.append(_Token("string", "".join(value), start_line, start_col, col - start_col))
            continue
        if text.startswith("..", i):
            advance(2)
            tokens.append(_Token("punct", "..", start_line, start_col, 2))
            continue
        if ch in _PUNCT:
            advance(1)
            tokens.append(_Token("punct", ch, start_line, start_col, 1))
            continue
        errors.append(ParseError(SourceSpan(start_line, start_col, 1), "token", ch))
        advance(1)

    tokens.append(_Token("eof", END_OF_INPUT, line, col, 0))
    return tokens, errors


class _Abort(Exception):
    pass


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.errors: list[ParseError] = []

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != "eof":
            self.pos += 1
        return tok

    def fail(self, expected: str) -> None:
        tok = self.peek()
        self.errors.append(ParseError(tok.span, expected, tok.value))
        raise _Abort()

    def expect_kw(self, word: str) -> _Token:
        tok = self.peek()
        if tok.type == "kw" and tok.value == word:
            return self.next()
        self.fail(f'"{word}"')

    def expect_punct(self, p: str) -> _Token:
        tok = self.peek()
        if tok.type == "punct" and tok.value == p:
            return self.next()
        self.fail(f'"{p}"')

    def expect_ident(self) -> _Token:
        tok = self.peek()
        if tok.type == "ident":
            return self.next()
        self.fail("identifier")

    def expect_int(self) -> int:
        tok = self.peek()
        if tok.type == "int":
            self.next()
            return int(tok.value)
        self.fail("integer")

    def expect_string(self) -> str:
        tok = self.peek()
        if tok.type == "string":
            self.next()
            return tok.value
        self.fail("string")

    def at_kw(self, *words: str) -> bool:
        tok = self.peek()
        return tok.type == "kw" and tok.value in words

    def at_punct(self, p: str) -> bool:
        tok = self.peek()
        return tok.type == "punct" and tok.value == p

    def recover(self) -> None:
        """Skip to the start of the next declaration so later errors still surface."""
        depth = 0
        while True:
            tok = self.peek()
            if tok.type == "eof":
                return
            if depth == 0 and (self.at_kw("vp", "cp") or tok.type == "ident"):
                return
            self.next()
            if tok.type == "punct":
                if tok.value == "{":
                    depth += 1
                elif tok.value == "}":
                    depth = max(0, depth - 1)
                elif tok.value == ";" and depth == 0:
                    return


def parse(text: str) -> VariabilityModel:
    """Parse DSL source into a model value; raises ParseFailure with all errors."""
    tokens, lex_errors = _tokenize(text)
    p = _Parser(tokens)
    p.errors.extend(lex_errors)

    name = ""
    vps: list[VariationPoint] = []
    variants: list[Variant] = []
    variant_ids: set[str] = set()
    constraints: list[Constraint] = []

    def declare(variant_id: str) -> None:
        if variant_id not in variant_ids:
            variant_ids.add(variant_id)
            variants.append(Variant(variant_id))

    def parse_guard() -> str | None:
        if p.at_kw("when"):
            p.next()
            return p.expect_string()
        return None

    def parse_vp() -> VariationPoint:
        visibility = Visibility.INTERNAL if p.next().value == "vp" else Visibility.EXTERNAL
        vp_id = p.expect_ident().value
        p.expect_kw("layer")
        tok = p.peek()
        if tok.type == "kw" and tok.value in _LAYERS:
            p.next()
            layer = _LAYERS[tok.value]
        else:
            p.fail("process|service|component")
        p.expect_punct("{")
        mandatory: list[VariantEdge] = []
        optional: list[VariantEdge] = []
        while p.at_kw("mandatory", "optional"):
            kind = EdgeKind.MANDATORY if p.next().value == "mandatory" else EdgeKind.OPTIONAL
            vid = p.expect_ident().value
            guard = parse_guard()
            p.expect_punct(";")
            declare(vid)
            (mandatory if kind is EdgeKind.MANDATORY else optional).append(
                VariantEdge(vid, kind, guard=guard)
            )
        group = None
        if p.at_kw("alt"):
            p.next()
            p.expect_punct("[")
            lo = p.expect_int()
            p.expect_punct("..")
            hi = p.expect_int()
            p.expect_punct("]")
            p.expect_punct("{")
            members: list[VariantEdge] = []
            while not p.at_punct("}"):
                vid = p.expect_ident().value
                guard = parse_guard()
                p.expect_punct(";")
                declare(vid)
                members.append(VariantEdge(vid, EdgeKind.OPTIONAL, guard=guard))
            if not members:
                p.fail("identifier")
            p.expect_punct("}")
            group = AlternativeGroup(lo, hi, tuple(members))
        p.expect_punct("}")
        return VariationPoint(vp_id, visibility, layer, tuple(mandatory), tuple(optional), group)

    def parse_constraint() -> Constraint:
        source = p.expect_ident().value
        tok = p.peek()
        if tok.type == "kw" and tok.value in ("requires", "excludes"):
            p.next()
            kind = ConstraintKind(tok.value)
        else:
            p.fail('"requires"|"excludes"')
        target = p.expect_ident().value
        p.expect_punct(";")
        return Constraint(kind, source, target)

    try:
        p.expect_kw("model")
        name = p.expect_string()
    except _Abort:
        p.recover()

    while p.peek().type != "eof":
        try:
            if p.at_kw("vp", "cp"):
                vps.append(parse_vp())
            elif p.peek().type == "ident":
                constraints.append(parse_constraint())
            else:
                p.fail("vp|cp|identifier")
        except _Abort:
            p.recover()

    if p.errors:
        raise ParseFailure(p.errors)
    return VariabilityModel(name, tuple(vps), tuple(variants), tuple(constraints))


def _quote(text: str) -> str:
    return '"' + "".join(_UNESCAPES.get(ch, ch) for ch in text) + '"'


def _edge_line(edge: VariantEdge, indent: str, keyword: str = "") -> str:
    head = f"{indent}{keyword}{' ' if keyword else ''}{edge.variant_id}"
    if edge.guard is not None:
        head += f" when {_quote(edge.guard)}"
    return head + ";"


def serialize(model: VariabilityModel) -> str:
    """Render the canonical DSL form: one declaration per line, two-space
    indent, declaration order preserved. Byte-stable for equal inputs."""
    if not model.name:
        raise SerializeError("model name must be nonempty")
    diags = well_formed(model)
    if has_errors(diags):
        raise SerializeError(
            "model fails well-formedness: " + "; ".join(d.code for d in diags), diags
        )
    lines = [f"model {_quote(model.name)}"]
    for vp in model.vps:
        kw = "vp" if vp.visibility is Visibility.INTERNAL else "cp"
        lines.append(f"{kw} {vp.id} layer {vp.layer.value} {{")
        for e in vp.mandatory_edges:
            lines.append(_edge_line(e, "  ", "mandatory"))
        for e in vp.optional_edges:
            lines.append(_edge_line(e, "  ", "optional"))
        if vp.group is not None:
            lines.append(f"  alt [{vp.group.min}..{vp.group.max}] {{")
            for e in vp.group.members:
                lines.append(_edge_line(e, "    "))
            lines.append("  }")
        lines.append("}")
    for c in model.constraints:
        lines.append(f"{c.source} {c.kind.value} {c.target};")
    return "\n".join(lines) + "\n"
