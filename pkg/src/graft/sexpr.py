"""Tiny s-expression reader/printer shared by the formula and term syntaxes."""
from __future__ import annotations


class SexprError(ValueError):
    def __init__(self, msg: str, pos: int | None = None):
        self.pos = pos
        if pos is not None:
            msg = f"at offset {pos}: {msg}"
        super().__init__(msg)


class Atom(str):
    """A symbol token that remembers where it came from."""

    pos: int = -1

    def __new__(cls, text: str, pos: int = -1):
        obj = super().__new__(cls, text)
        obj.pos = pos
        return obj


class SList(list):
    pos: int = -1


def tokenize(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif c in "()":
            yield c, i
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            yield text[i:j], i
            i = j


def parse(text: str):
    """Parse exactly one expression; nested lists of Atom."""
    toks = list(tokenize(text))
    if not toks:
        raise SexprError("empty input", 0)
    expr, k = _read(toks, 0)
    if k != len(toks):
        raise SexprError("trailing input", toks[k][1])
    return expr


def parse_many(text: str) -> list:
    toks = list(tokenize(text))
    out, k = [], 0
    while k < len(toks):
        e, k = _read(toks, k)
        out.append(e)
    return out


def _read(toks, k):
    if k >= len(toks):
        raise SexprError("unexpected end of input", None)
    tok, pos = toks[k]
    if tok == "(":
        lst = SList()
        lst.pos = pos
        k += 1
        while True:
            if k >= len(toks):
                raise SexprError("unclosed '('", pos)
            if toks[k][0] == ")":
                return lst, k + 1
            e, k = _read(toks, k)
            lst.append(e)
    if tok == ")":
        raise SexprError("unexpected ')'", pos)
    return Atom(tok, pos), k + 1


def dump(expr) -> str:
    if isinstance(expr, (list, tuple)):
        return "(" + " ".join(dump(e) for e in expr) + ")"
    return str(expr)


def where(expr) -> int | None:
    p = getattr(expr, "pos", -1)
    return None if p is None or p < 0 else p
