"""S-expression serialization for expression trees.

Grammar (whitespace separated, UTF-8):

    tree   := bool
    bool   := "(" ("OR"|"AND") w bool bool ")" | "(" ("OR3"|"AND3") w bool bool bool ")"
            | "(" "NOT" w bool ")" | cmp
    cmp    := "(" ("GT"|"LT") w math math ")"
    math   := "(" ("ADD"|"MUL") math math ")" | "(" ("NEG"|"SIGM") math ")"
            | "(" "LIN2" a a math math ")" | "(" "LIN3" a a a math math math ")" | term
    term   := "x" NAT | REAL
    w, a   := REAL          # w omitted entirely in hard-variant files

Model files carry a header line "#sgp-tree v1 variant=<hard|soft>
n_features=<n>" followed by one tree. Reals are rendered with repr(), whose
shortest round-trip form re-parses to the identical float, so serialization
preserves evaluation exactly.

The parser checks token shape and arity only; layer-chain legality is
validate()'s job.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .tree import ARITY, OP_CLASS, ExprTree, Node, OpClass, OpKind, Variant

_SYMBOL_RE = re.compile(r"^x(\d+)$")
_HEADER_RE = re.compile(r"^#sgp-tree v1 variant=(hard|soft) n_features=(\d+)\s*$")

_KIND_BY_NAME = {k.name: k for k in OpKind if k not in (OpKind.SYMBOL, OpKind.CONST)}


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class _Token:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> List[_Token]:
    out: List[_Token] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch in "()":
            out.append(_Token(ch, line, col))
            col += 1
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            out.append(_Token(text[i:j], line, col))
            col += j - i
            i = j
    return out


class _Parser:
    def __init__(self, tokens: List[_Token], soft: bool, end_line: int):
        self.tokens = tokens
        self.soft = soft
        self.pos = 0
        self.end_line = end_line

    def peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of input, expected {what}", self.end_line, 1)
        self.pos += 1
        return tok

    def real(self, what: str) -> float:
        tok = self.take(what)
        try:
            return float(tok.text)
        except ValueError:
            raise ParseError(f"expected {what}, got {tok.text!r}", tok.line, tok.col) from None

    def node(self) -> Node:
        tok = self.take("a term or '('")
        if tok.text == "(":
            return self.operator()
        if tok.text == ")":
            raise ParseError("expected a term or '('", tok.line, tok.col)
        m = _SYMBOL_RE.match(tok.text)
        if m:
            return Node(OpKind.SYMBOL, payload=int(m.group(1)))
        try:
            return Node(OpKind.CONST, payload=float(tok.text))
        except ValueError:
            raise ParseError(f"expected a term, got {tok.text!r}", tok.line, tok.col) from None

    def operator(self) -> Node:
        tok = self.take("an operator name")
        kind = _KIND_BY_NAME.get(tok.text)
        if kind is None:
            raise ParseError(f"unknown operator {tok.text!r}", tok.line, tok.col)
        weight = None
        if self.soft and OP_CLASS[kind] in (OpClass.BOOLEAN, OpClass.COMPARISON):
            weight = self.real(f"a weight for {kind.name}")
        coeffs = None
        if kind in (OpKind.LIN2, OpKind.LIN3):
            coeffs = tuple(self.real(f"a coefficient for {kind.name}")
                           for _ in range(ARITY[kind]))
        children = []
        for _ in range(ARITY[kind]):
            nxt = self.peek()
            if nxt is None or nxt.text == ")":
                where = nxt or _Token(")", self.end_line, 1)
                raise ParseError(
                    f"{kind.name} expects {ARITY[kind]} children, got {len(children)}",
                    where.line, where.col)
            children.append(self.node())
        closer = self.take("')'")
        if closer.text != ")":
            raise ParseError(f"{kind.name} expects {ARITY[kind]} children; "
                             f"unexpected {closer.text!r}", closer.line, closer.col)
        return Node(kind, tuple(children), weight=weight, coeffs=coeffs)


def parse_tree(text: str, variant: Variant) -> ExprTree:
    """Parse one s-expression into a tree of the given variant.

    The variant decides whether boolean/comparison operators carry a weight
    token; hard and soft renderings of the same structure are not mutually
    parseable, so callers must know which they hold (model files record it
    in the header).
    """
    tokens = _tokenize(text)
    end_line = text.count("\n") + 1
    p = _Parser(tokens, variant is Variant.SOFT, end_line)
    root = p.node()
    rest = p.peek()
    if rest is not None:
        raise ParseError(f"unexpected trailing input {rest.text!r}", rest.line, rest.col)
    return ExprTree(variant, root)


def _real(v: float) -> str:
    return repr(float(v))


def format_tree(tree: ExprTree) -> str:
    """Render a tree as a single-line s-expression (inverse of parse_tree)."""

    def fmt(node: Node) -> str:
        if node.kind is OpKind.SYMBOL:
            return f"x{node.payload}"
        if node.kind is OpKind.CONST:
            return _real(node.payload)
        parts = [node.kind.name]
        if node.weight is not None:
            parts.append(_real(node.weight))
        if node.coeffs is not None:
            parts.extend(_real(c) for c in node.coeffs)
        parts.extend(fmt(c) for c in node.children)
        return "(" + " ".join(parts) + ")"

    return fmt(tree.root)


def format_model(tree: ExprTree, n_features: int) -> str:
    header = f"#sgp-tree v1 variant={tree.variant.value} n_features={int(n_features)}"
    return header + "\n" + format_tree(tree) + "\n"


def parse_model(text: str) -> Tuple[ExprTree, int]:
    """Parse a model file (header + tree); returns (tree, n_features)."""
    newline = text.find("\n")
    if newline < 0:
        raise ParseError("missing model body after header", 1, 1)
    m = _HEADER_RE.match(text[:newline])
    if not m:
        raise ParseError("bad or missing '#sgp-tree v1' header", 1, 1)
    variant = Variant(m.group(1))
    n_features = int(m.group(2))
    body = text[newline + 1:]
    tokens = _tokenize(body)
    # shift body token line numbers past the header
    tokens = [_Token(t.text, t.line + 1, t.col) for t in tokens]
    p = _Parser(tokens, variant is Variant.SOFT, body.count("\n") + 2)
    root = p.node()
    rest = p.peek()
    if rest is not None:
        raise ParseError(f"unexpected trailing input {rest.text!r}", rest.line, rest.col)
    return ExprTree(variant, root), n_features


def save_model(path, tree: ExprTree, n_features: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_model(tree, n_features))


def load_model(path) -> Tuple[ExprTree, int]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())
