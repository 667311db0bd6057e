"""Recursive-descent parser expanding expressions into polynomials in
(u, conj(u), ux, conj(ux)).

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary ("*" unary)*
    unary  := ("+" | "-") unary | power
    power  := atom (("^" | "**") INT)?
    atom   := NUMBER | IMAG | "i" | "u" | "ux" | "conj" "(" expr ")"
            | "(" expr ")" | "|" expr "|"

``|e|`` is only legal raised to an even power.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

Powers = tuple[int, int, int, int]
Poly = dict[Powers, complex]

MAX_EXPONENT = 32
MAX_DEGREE = 24


class ParseError(ValueError):
    def __init__(self, message: str, position: int | None = None, source: str | None = None):
        self.position = position
        self.source = source
        if position is not None:
            message = f"{message} at position {position}"
            if source is not None:
                message += f"\n  {source}\n  {' ' * position}^"
        super().__init__(message)


class ExponentOverflowError(ParseError):
    pass


class DegreeError(ValueError):
    pass


_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z0-9_]))?
  | (?P<pow>\*\*|\^)
  | (?P<op>[-+*()|])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", pos, src)
        if m.lastgroup != "ws":
            if m.group("num") is not None:
                kind = "imag" if m.group("imag") else "num"
                toks.append(_Tok(kind, m.group("num"), pos))
            else:
                toks.append(_Tok(m.lastgroup, m.group(m.lastgroup), pos))
        pos = m.end()
    toks.append(_Tok("end", "", len(src)))
    return toks


def _const(c: complex) -> Poly:
    return {(0, 0, 0, 0): complex(c)} if c != 0 else {}


def _add(p: Poly, q: Poly, sign: int = 1) -> Poly:
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0j) + sign * v
    return {k: v for k, v in out.items() if v != 0}


def _mul(p: Poly, q: Poly, pos: int, src: str) -> Poly:
    out: Poly = {}
    for k1, v1 in p.items():
        for k2, v2 in q.items():
            k = (k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2], k1[3] + k2[3])
            if sum(k) > MAX_DEGREE:
                raise ExponentOverflowError(
                    f"expansion exceeds degree {MAX_DEGREE}", pos, src)
            out[k] = out.get(k, 0j) + v1 * v2
    return {k: v for k, v in out.items() if v != 0}


def _pow(p: Poly, n: int, pos: int, src: str) -> Poly:
    out = _const(1)
    for _ in range(n):
        out = _mul(out, p, pos, src)
    return out


def _conj(p: Poly) -> Poly:
    return {(b, a, d, c): v.conjugate() for (a, b, c, d), v in p.items()}


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def _expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind in ("num", "imag"):
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", self.tok.pos, self.src)
        return self._advance()

    def parse(self) -> Poly:
        if self.tok.kind == "end":
            raise ParseError("empty expression", 0, self.src)
        p = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.pos, self.src)
        return p

    def expr(self) -> Poly:
        p = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            sign = 1 if self._advance().text == "+" else -1
            p = _add(p, self.term(), sign)
        return p

    def term(self) -> Poly:
        p = self.unary()
        while self.tok.kind == "op" and self.tok.text == "*":
            t = self._advance()
            p = _mul(p, self.unary(), t.pos, self.src)
        return p

    def unary(self) -> Poly:
        if self.tok.kind == "op" and self.tok.text in "+-":
            sign = 1 if self._advance().text == "+" else -1
            return {k: sign * v for k, v in self.unary().items()}
        return self.power()

    def power(self) -> Poly:
        start = self.tok.pos
        is_abs = self.tok.kind == "op" and self.tok.text == "|"
        base = self.atom()
        if self.tok.kind != "pow":
            if is_abs:
                raise ParseError("|...| must be raised to an even power", start, self.src)
            return base
        self._advance()
        t = self.tok
        if t.kind != "num" or not t.text.isdigit():
            raise ParseError("exponent must be a non-negative integer", t.pos, self.src)
        self._advance()
        n = int(t.text)
        if n > MAX_EXPONENT:
            raise ExponentOverflowError(f"exponent {n} exceeds {MAX_EXPONENT}", t.pos, self.src)
        if is_abs:
            if n % 2:
                raise ParseError("|...| must be raised to an even power", start, self.src)
            base = _mul(base, _conj(base), start, self.src)
            n //= 2
        return _pow(base, n, t.pos, self.src)

    def atom(self) -> Poly:
        t = self.tok
        if t.kind == "num":
            self._advance()
            return _const(float(t.text))
        if t.kind == "imag":
            self._advance()
            return _const(1j * float(t.text))
        if t.kind == "ident":
            self._advance()
            if t.text == "i":
                return _const(1j)
            if t.text == "u":
                return {(1, 0, 0, 0): 1 + 0j}
            if t.text == "ux":
                return {(0, 0, 1, 0): 1 + 0j}
            if t.text == "conj":
                self._expect("(")
                p = self.expr()
                self._expect(")")
                return _conj(p)
            raise ParseError(f"unknown identifier {t.text!r}", t.pos, self.src)
        if t.kind == "op" and t.text == "(":
            self._advance()
            p = self.expr()
            self._expect(")")
            return p
        if t.kind == "op" and t.text == "|":
            self._advance()
            p = self.expr()
            self._expect("|")
            return p
        found = t.text or "end of input"
        raise ParseError(f"unexpected {found!r}", t.pos, self.src)


def parse_polynomial(src: str) -> Poly:
    """Expand ``src`` into a dict mapping (a, b, c, d) to its coefficient."""
    return _Parser(src).parse()
