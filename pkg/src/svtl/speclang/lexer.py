from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import Diagnostic, SpecError

KEYWORDS = frozenset("""
    const domain alphabet measure var init on when otherwise guard component
    export project into freeze emit property forall in
    and or not implies true false
    next possible_next always globally within eventually bounded
    bool rat sym
""".split())

SORTS = ("bool", "rat", "sym")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>;[^\n]*)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|\.\.|!=|<=|>=|[()\[\]{},:=<>+\-*/|'])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, number, op, eof
    text: str
    line: int
    col: int
    adjacent: bool  # no whitespace or comment between this and the previous token

    def __str__(self):
        return "end of input" if self.kind == "eof" else repr(self.text)


def tokenize(text: str) -> list:
    tokens = []
    pos = 0
    line, line_start = 1, 0
    adjacent = False
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SpecError([Diagnostic(f"unexpected character {text[pos]!r}",
                                        line, pos - line_start + 1, "lexical")])
        kind = m.lastgroup
        s = m.group()
        col = pos - line_start + 1
        if kind in ("ws", "comment"):
            adjacent = False
        else:
            if kind == "ident" and s in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, s, line, col, adjacent))
            adjacent = True
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1, False))
    return tokens
