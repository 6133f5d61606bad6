"""Minimal JavaScript tokenizer and well-formedness checker.

This is deliberately not a parser. It knows just enough lexical structure
(strings, templates, comments, regex literals, numbers) to support three
consumers: the fuzzer's token-aware mutation operators, the corpus
deduplicator, and the fallback validity checker used when no engine with a
parse-only mode is configured. The checker accepts a superset of the real
grammar; anything it rejects is definitely broken (unterminated literal,
unbalanced bracket, operator with a missing operand).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

KEYWORDS = frozenset(
    """
    await break case catch class const continue debugger default delete do
    else enum export extends false finally for function if import in
    instanceof let new null of return static super switch this throw true
    try typeof var void while with yield
    """.split()
)

# Multi-character punctuators first so the scanner is longest-match.
_PUNCTUATORS = sorted(
    [
        ">>>=", "===", "!==", "**=", "<<=", ">>=", "&&=", "||=", "??=", "...",
        ">>>", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=",
        "|=", "^=", "**", "&&", "||", "??", "?.", "<<", ">>", "=>", "++",
        "--", "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "+", "-",
        "*", "/", "%", "&", "|", "^", "!", "~", "?", ":", "=", ".", "#", "@",
    ],
    key=len,
    reverse=True,
)

_NUM_RE = re.compile(
    r"""
      0[xX][0-9a-fA-F_]+n?
    | 0[oO][0-7_]+n?
    | 0[bB][01_]+n?
    | \d[\d_]*(?:\.[\d_]*)?(?:[eE][+-]?\d+)?n?
    | \.\d[\d_]*(?:[eE][+-]?\d+)?
    """,
    re.VERBOSE,
)

_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")

# Tokens after which a "/" is a division sign rather than a regex literal.
_DIV_PRECEDERS_KIND = {"ident", "num", "str", "template", "regex"}
_DIV_PRECEDERS_TEXT = {")", "]", "++", "--", "}"}
_REGEX_KEYWORDS = {
    "return", "typeof", "instanceof", "in", "of", "new", "delete", "void",
    "case", "do", "else", "throw", "yield", "await",
}

# Operators and keyword operators that must be followed by an operand.
_NEEDS_OPERAND = {
    "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=",
    "|=", "^=", "&&=", "||=", "??=", "==", "===", "!=", "!==", "<", ">",
    "<=", ">=", "+", "-", "*", "/", "%", "**", "&&", "||", "??", "&", "|",
    "^", "<<", ">>", ">>>", "?", "=>", "!", "~",
    "typeof", "void", "delete", "new", "instanceof", "in", "case", "throw",
}

# Tokens that can never start an operand.
_BAD_OPERAND_START = {
    ";", ",", ")", "]", "}", "=", "==", "===", "!=", "!==", "*", "%", "**",
    "<=", ">=", "&&", "||", "??", "<<", ">>", ">>>", "=>", "?", ":", "+=",
    "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=", "|=", "^=",
    "&&=", "||=", "??=",
}

_OPEN_TO_CLOSE = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {")", "]", "}"}


class TokenizeError(ValueError):
    """Lexical structure could not be recovered (unterminated literal etc.)."""

    def __init__(self, reason: str, line: int):
        self.reason = reason
        self.line = line
        super().__init__(f"line {line}: {reason}")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | str | template | regex | punct | comment
    text: str
    start: int
    end: int
    line: int


def _line_of(source: str, pos: int) -> int:
    return source.count("\n", 0, pos) + 1


def _scan_string(source: str, i: int) -> int:
    quote = source[i]
    j = i + 1
    n = len(source)
    while j < n:
        c = source[j]
        if c == "\\":
            j += 2
            continue
        if c == quote:
            return j + 1
        if c in "\n\r":
            raise TokenizeError("unterminated string literal", _line_of(source, i))
        j += 1
    raise TokenizeError("unterminated string literal", _line_of(source, i))


def _scan_template(source: str, i: int) -> int:
    # Templates may span lines; substitutions are skipped with a brace
    # counter, which accepts a superset (braces inside nested strings are
    # counted too, but miscounts only ever reject, never mis-accept).
    j = i + 1
    n = len(source)
    depth = 0
    while j < n:
        c = source[j]
        if c == "\\":
            j += 2
            continue
        if depth == 0 and c == "`":
            return j + 1
        if c == "$" and j + 1 < n and source[j + 1] == "{":
            depth += 1
            j += 2
            continue
        if depth > 0:
            if c == "{":
                depth += 1
            elif c == "}":
                depth -= 1
        j += 1
    raise TokenizeError("unterminated template literal", _line_of(source, i))


def _scan_regex(source: str, i: int) -> int:
    j = i + 1
    n = len(source)
    in_class = False
    while j < n:
        c = source[j]
        if c == "\\":
            j += 2
            continue
        if c in "\n\r":
            raise TokenizeError("unterminated regex literal", _line_of(source, i))
        if c == "[":
            in_class = True
        elif c == "]":
            in_class = False
        elif c == "/" and not in_class:
            j += 1
            while j < n and source[j].isalpha():
                j += 1
            return j
        j += 1
    raise TokenizeError("unterminated regex literal", _line_of(source, i))


def _regex_allowed(prev: Token | None) -> bool:
    if prev is None:
        return True
    if prev.kind in ("ident",) and prev.text in _REGEX_KEYWORDS:
        return True
    if prev.kind in _DIV_PRECEDERS_KIND:
        return False
    if prev.kind == "punct" and prev.text in _DIV_PRECEDERS_TEXT:
        return False
    return True


def tokenize(source: str, keep_comments: bool = False) -> list[Token]:
    """Split source into tokens. Raises TokenizeError on unterminated
    strings, templates, comments, or regex literals."""
    tokens: list[Token] = []
    prev: Token | None = None
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "/":
            j = source.find("\n", i)
            j = n if j < 0 else j
            if keep_comments:
                tokens.append(Token("comment", source[i:j], i, j, _line_of(source, i)))
            i = j
            continue
        if c == "/" and i + 1 < n and source[i + 1] == "*":
            j = source.find("*/", i + 2)
            if j < 0:
                raise TokenizeError("unterminated block comment", _line_of(source, i))
            j += 2
            if keep_comments:
                tokens.append(Token("comment", source[i:j], i, j, _line_of(source, i)))
            i = j
            continue
        if c in "'\"":
            j = _scan_string(source, i)
            tok = Token("str", source[i:j], i, j, _line_of(source, i))
        elif c == "`":
            j = _scan_template(source, i)
            tok = Token("template", source[i:j], i, j, _line_of(source, i))
        elif c == "/" and _regex_allowed(prev):
            j = _scan_regex(source, i)
            tok = Token("regex", source[i:j], i, j, _line_of(source, i))
        else:
            m = _NUM_RE.match(source, i)
            if m:
                tok = Token("num", m.group(), i, m.end(), _line_of(source, i))
                j = m.end()
            else:
                m = _IDENT_RE.match(source, i)
                if m:
                    tok = Token("ident", m.group(), i, m.end(), _line_of(source, i))
                    j = m.end()
                else:
                    for p in _PUNCTUATORS:
                        if source.startswith(p, i):
                            j = i + len(p)
                            tok = Token("punct", p, i, j, _line_of(source, i))
                            break
                    else:
                        raise TokenizeError(
                            f"unexpected character {c!r}", _line_of(source, i)
                        )
        tokens.append(tok)
        prev = tok
        i = j
    return tokens


@dataclass(frozen=True)
class SyntaxCheck:
    ok: bool
    reason: str | None = None
    line: int | None = None


def _operand_needed(tok: Token) -> bool:
    if tok.kind == "punct":
        return tok.text in _NEEDS_OPERAND
    if tok.kind == "ident":
        return tok.text in _NEEDS_OPERAND and tok.text in KEYWORDS
    return False


def _bad_operand_start(tok: Token) -> bool:
    return tok.kind == "punct" and tok.text in _BAD_OPERAND_START


def check_source(source: str) -> SyntaxCheck:
    """Cheap well-formedness verdict: lexes cleanly, brackets balance and
    no operator is left dangling without an operand."""
    try:
        tokens = tokenize(source)
    except TokenizeError as exc:
        return SyntaxCheck(False, exc.reason, exc.line)

    stack: list[tuple[str, int]] = []
    for tok in tokens:
        if tok.kind != "punct":
            continue
        if tok.text in _OPEN_TO_CLOSE:
            stack.append((tok.text, tok.line))
        elif tok.text in _CLOSERS:
            if not stack or _OPEN_TO_CLOSE[stack[-1][0]] != tok.text:
                return SyntaxCheck(False, f"unbalanced {tok.text!r}", tok.line)
            stack.pop()
    if stack:
        opener, line = stack[-1]
        return SyntaxCheck(False, f"unclosed {opener!r}", line)

    for idx, tok in enumerate(tokens):
        if not _operand_needed(tok):
            continue
        if tok.kind == "ident" and idx > 0:
            prev = tokens[idx - 1]
            # Reserved words are legal as property keys: {in: 1}, a.delete(x).
            if prev.kind == "punct" and prev.text in (".", "?.", "{", ","):
                continue
        if idx + 1 >= len(tokens):
            return SyntaxCheck(False, f"{tok.text!r} at end of input", tok.line)
        nxt = tokens[idx + 1]
        if _bad_operand_start(nxt):
            return SyntaxCheck(
                False, f"{tok.text!r} followed by {nxt.text!r}", tok.line
            )

    for idx, tok in enumerate(tokens):
        if tok.kind == "ident" and tok.text in ("var", "const"):
            if idx > 0:
                prev = tokens[idx - 1]
                if prev.kind == "punct" and prev.text in (".", "?.", "{", ","):
                    continue
            if idx + 1 >= len(tokens):
                return SyntaxCheck(False, f"{tok.text!r} without binding", tok.line)
            nxt = tokens[idx + 1]
            if not (nxt.kind == "ident" or nxt.text in ("[", "{")):
                return SyntaxCheck(False, f"{tok.text!r} without binding", tok.line)

    return SyntaxCheck(True)


def strip_and_normalize(source: str) -> list[str]:
    """Token texts with comments removed, for similarity comparison.

    Falls back to whitespace splitting when the file does not lex."""
    try:
        return [t.text for t in tokenize(source)]
    except TokenizeError:
        return source.split()
