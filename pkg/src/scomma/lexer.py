"""Hand-rolled lexer shared by the model, data, and descriptor parsers.

Also provides ``count_tokens``, the whitespace-independent size measure used
by the benchmark report; it runs the same scanner in a lenient mode that
never rejects its input (unknown characters become single-character tokens),
so emitted target files in foreign syntaxes can be measured too.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, SourceSpan, error

IDENT = "ident"
INT = "int"
REAL = "real"
STRING = "string"
SYMBOL = "symbol"
KEYWORD = "keyword"
EOF = "eof"

KEYWORDS = frozenset(
    {
        "class", "extends", "import", "constraint", "forall", "if", "else",
        "enum", "int", "real", "bool", "set", "of", "in",
        "not", "and", "or", "xor",
        "union", "diff", "symdiff", "intersection", "subset", "superset",
        "minimize", "maximize", "true", "false",
    }
)

# Longest symbols first so maximal munch falls out of the scan order.
SYMBOLS = (
    "<->", ":=", "->", "<-", "<=", ">=", "<>", "..",
    "{", "}", "[", "]", "(", ")", ",", ";", ":", ".",
    "=", "<", ">", "+", "-", "*", "/", "_", "?",
)

_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    value: object
    span: SourceSpan

    def is_symbol(self, *texts: str) -> bool:
        return self.kind == SYMBOL and self.text in texts

    def is_keyword(self, *words: str) -> bool:
        return self.kind == KEYWORD and self.text in words


class LexError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        self.diagnostic = diagnostic
        super().__init__(diagnostic.render())


def tokenize(text: str, filename: str = "<input>", lenient: bool = False) -> list[Token]:
    """Scan ``text`` into tokens, ending with an EOF token.

    Strict mode raises :class:`LexError` on malformed input; lenient mode
    turns anything unrecognized into a one-character SYMBOL token.
    """
    tokens: list[Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)

    def span(length: int, at_line: int, at_col: int) -> SourceSpan:
        return SourceSpan(filename, at_line, at_col, max(length, 1))

    def advance(count: int) -> None:
        nonlocal pos, line, col
        for _ in range(count):
            if pos < n and text[pos] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            pos += 1

    while pos < n:
        ch = text[pos]
        if ch in " \t\r\n":
            advance(1)
            continue
        if ch == "/" and pos + 1 < n and text[pos + 1] == "/":
            while pos < n and text[pos] != "\n":
                advance(1)
            continue
        tline, tcol = line, col
        if ch.isdigit():
            start = pos
            while pos < n and text[pos].isdigit():
                advance(1)
            is_real = False
            # "1.5" is a real literal, "1..5" is int followed by a range symbol
            if pos + 1 < n and text[pos] == "." and text[pos + 1].isdigit():
                is_real = True
                advance(1)
                while pos < n and text[pos].isdigit():
                    advance(1)
            if pos < n and text[pos] in "eE" and (
                pos + 1 < n
                and (text[pos + 1].isdigit() or (text[pos + 1] in "+-" and pos + 2 < n and text[pos + 2].isdigit()))
            ):
                is_real = True
                advance(1)
                if text[pos] in "+-":
                    advance(1)
                while pos < n and text[pos].isdigit():
                    advance(1)
            raw = text[start:pos]
            if is_real:
                tokens.append(Token(REAL, raw, float(raw), span(len(raw), tline, tcol)))
            else:
                tokens.append(Token(INT, raw, int(raw), span(len(raw), tline, tcol)))
            continue
        if ch.isalpha() or (ch == "_" and pos + 1 < n and (text[pos + 1].isalnum() or text[pos + 1] == "_")):
            start = pos
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                advance(1)
            raw = text[start:pos]
            kind = KEYWORD if raw in KEYWORDS else IDENT
            value: object = raw
            if raw == "true":
                value = True
            elif raw == "false":
                value = False
            tokens.append(Token(kind, raw, value, span(len(raw), tline, tcol)))
            continue
        if ch == '"':
            start = pos
            advance(1)
            chunks: list[str] = []
            closed = False
            while pos < n:
                c = text[pos]
                if c == '"':
                    advance(1)
                    closed = True
                    break
                if c == "\\" and pos + 1 < n:
                    esc = text[pos + 1]
                    chunks.append(_ESCAPES.get(esc, esc))
                    advance(2)
                    continue
                if c == "\n":
                    break
                chunks.append(c)
                advance(1)
            raw = text[start:pos]
            if not closed and not lenient:
                raise LexError(error("unterminated string literal", span(len(raw), tline, tcol)))
            tokens.append(Token(STRING, raw, "".join(chunks), span(len(raw), tline, tcol)))
            continue
        matched = None
        for sym in SYMBOLS:
            if text.startswith(sym, pos):
                matched = sym
                break
        if matched is not None:
            advance(len(matched))
            tokens.append(Token(SYMBOL, matched, matched, span(len(matched), tline, tcol)))
            continue
        if lenient:
            advance(1)
            tokens.append(Token(SYMBOL, ch, ch, span(1, tline, tcol)))
            continue
        raise LexError(error(f"unexpected character {ch!r}", span(1, tline, tcol)))

    tokens.append(Token(EOF, "", None, SourceSpan(filename, line, col, 1)))
    return tokens


def count_tokens(text: str) -> int:
    """Number of lexical tokens in ``text``, ignoring whitespace and comments."""
    return len(tokenize(text, "<count>", lenient=True)) - 1
