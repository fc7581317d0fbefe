"""
Model-formula mini-language.

    formula  := response "~" rhs
    response := ident | "Surv" "(" ident "," ident ")"
    rhs      := "1" | "." | term ("+" term)*
    term     := ident

Main effects only: interactions, transformations and nesting are rejected
with an explicit message.
"""

import re
from collections.abc import Sequence

from pydantic import BaseModel, ConfigDict, model_validator

from bayesics.errors import FormulaSyntaxError

# One token per match; "bad" catches anything outside the grammar.
_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|(?P<number>\d+(?:\.\d*)?)|(?P<op>[~+(),.])|(?P<bad>\S))"
)

_UNSUPPORTED_OPS = {
    "*": "interactions are not supported; list main effects joined by '+'",
    ":": "interactions are not supported; list main effects joined by '+'",
    "^": "interaction powers are not supported",
    "/": "nesting is not supported",
    "%": "nesting is not supported",
    "|": "grouping terms are not supported",
    "-": "term removal is not supported",
}


class Formula(BaseModel):
    model_config = ConfigDict(frozen=True)

    response: str | None = None
    survival: tuple[str, str] | None = None  # (time, event)
    terms: tuple[str, ...] = ()
    wildcard: bool = False
    has_intercept: bool = True

    @model_validator(mode="after")
    def _one_response(self) -> "Formula":
        if (self.response is None) == (self.survival is None):
            raise ValueError("a formula has exactly one response: a variable or a Surv(time, event) pair")
        if self.wildcard and self.terms:
            raise ValueError("'.' cannot be combined with explicit terms")
        return self

    @property
    def is_survival(self) -> bool:
        return self.survival is not None

    @property
    def response_variables(self) -> tuple[str, ...]:
        return self.survival if self.survival is not None else (self.response,)

    def expand(self, columns: Sequence[str]) -> tuple[str, ...]:
        """Terms with '.' replaced by every non-response column, in dataset order."""
        if not self.wildcard:
            return self.terms
        skip = set(self.response_variables)
        return tuple(c for c in columns if c not in skip)

    def __str__(self) -> str:
        lhs = f"Surv({self.survival[0]}, {self.survival[1]})" if self.survival else self.response
        if self.wildcard:
            rhs = "."
        elif self.terms:
            rhs = " + ".join(self.terms)
        else:
            rhs = "1"
        return f"{lhs} ~ {rhs}"


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int):
        self.kind = kind
        self.text = text
        self.pos = pos


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            break  # trailing whitespace
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if kind == "bad":
            reason = _UNSUPPORTED_OPS.get(value, f"unexpected character '{value}'")
            raise FormulaSyntaxError(reason, start, text)
        tokens.append(_Token(kind, value, start))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def fail(self, message: str, tok: _Token | None = None):
        raise FormulaSyntaxError(message, (tok or self.tok).pos, self.text)

    def expect(self, text: str) -> _Token:
        tok = self.tok
        if tok.text != text or tok.kind == "end":
            found = "end of formula" if tok.kind == "end" else f"'{tok.text}'"
            self.fail(f"expected '{text}', found {found}")
        self.i += 1
        return tok

    def ident(self, what: str) -> _Token:
        tok = self.tok
        if tok.kind != "ident":
            found = "end of formula" if tok.kind == "end" else f"'{tok.text}'"
            self.fail(f"expected {what}, found {found}")
        self.i += 1
        return tok

    def parse(self) -> Formula:
        response, survival = self.response()
        self.expect("~")
        terms, wildcard = self.rhs()
        if self.tok.kind != "end":
            self.fail(f"unexpected '{self.tok.text}' after the right-hand side")

        lhs_vars = set(survival) if survival else {response}
        for name, tok in terms:
            if name in lhs_vars:
                self.fail(f"response variable '{name}' repeated on the right-hand side", tok)
        seen: set[str] = set()
        for name, tok in terms:
            if name in seen:
                self.fail(f"duplicate term '{name}'", tok)
            seen.add(name)

        return Formula(
            response=response,
            survival=survival,
            terms=tuple(name for name, _ in terms),
            wildcard=wildcard,
        )

    def response(self) -> tuple[str | None, tuple[str, str] | None]:
        head = self.ident("a response variable")
        if self.tok.text != "(":
            return head.text, None
        if head.text != "Surv":
            self.fail(f"transformations such as '{head.text}(...)' are not supported", head)
        self.expect("(")
        time = self.ident("a time variable")
        self.expect(",")
        event = self.ident("an event indicator")
        self.expect(")")
        if time.text == event.text:
            self.fail("Surv() needs two different variables", event)
        return None, (time.text, event.text)

    def rhs(self) -> tuple[list[tuple[str, _Token]], bool]:
        tok = self.tok
        if tok.kind == "number":
            if tok.text != "1":
                self.fail("only '1' (intercept only) is allowed as a constant; intercept removal is not supported")
            self.i += 1
            return [], False
        if tok.text == ".":
            self.i += 1
            return [], True

        terms = [self.term()]
        while self.tok.text == "+":
            self.i += 1
            if self.tok.kind == "number" or self.tok.text == ".":
                self.fail("'1' and '.' must stand alone on the right-hand side")
            terms.append(self.term())
        return terms, False

    def term(self) -> tuple[str, _Token]:
        tok = self.ident("a term")
        if self.tok.text == "(":
            self.fail(f"transformations such as '{tok.text}(...)' are not supported", tok)
        return tok.text, tok


def parse_formula(text: str) -> Formula:
    """Parse a formula string.

    Examples:
        parse_formula("y ~ x1 + x2")              -> y ~ x1 + x2
        parse_formula("Surv(time,cens) ~ horTh")  -> survival response (time, cens)
        parse_formula("outcome ~ .")              -> wildcard right-hand side
    """
    if not text or not text.strip():
        raise FormulaSyntaxError("empty formula", 0, text or "")
    return _Parser(text).parse()
