"""Core log and template data types plus the canonical template grammar.

The canonical template string renders a type placeholder as ``[NAME]`` and a
literal keyword as ``<word>``; tokens are joined by single spaces. Parsing
accepts bare tokens as keywords so ground-truth files that mix literals and
placeholders ingest cleanly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .errors import EmptyLogError, EmptyTemplateError, EmptyWordError, UnknownTypeError

# Shipped default word-type candidates; runs may supply their own.
DEFAULT_TYPES = (
    "DATE",
    "TIME",
    "IP",
    "PATH",
    "ID",
    "NUM",
    "VAR",
    "STATUS",
    "LATENCY",
    "RESOURCE",
    "CODE",
    "ADDRESS",
)


class TokenKind(enum.Enum):
    PLACEHOLDER = "placeholder"
    KEYWORD = "keyword"


@dataclass(frozen=True)
class TemplateToken:
    """One template position: either a type placeholder or a literal keyword."""

    kind: TokenKind
    value: str

    def render(self) -> str:
        if self.kind is TokenKind.PLACEHOLDER:
            return f"[{self.value}]"
        return f"<{self.value}>"


def placeholder(name: str) -> TemplateToken:
    return TemplateToken(TokenKind.PLACEHOLDER, name)


def keyword(word: str) -> TemplateToken:
    return TemplateToken(TokenKind.KEYWORD, word)


@dataclass(frozen=True)
class Template:
    """Ordered token sequence describing one log structure."""

    tokens: tuple[TemplateToken, ...]

    def render(self) -> str:
        return " ".join(tok.render() for tok in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def keywords(self) -> tuple[str, ...]:
        return tuple(t.value for t in self.tokens if t.kind is TokenKind.KEYWORD)


@dataclass(frozen=True)
class LogRecord:
    """One raw log line as an ordered word sequence with a stable id."""

    id: int
    words: tuple[str, ...]
    raw: str

    def __len__(self) -> int:
        return len(self.words)

    @property
    def text(self) -> str:
        """Whitespace-normalized line (single spaces between words)."""
        return " ".join(self.words)


@dataclass
class TypeCatalog:
    """Allowed word types (fixed per run) and observed keywords (grows)."""

    types: frozenset[str] = field(default_factory=lambda: frozenset(DEFAULT_TYPES))
    keywords: set[str] = field(default_factory=set)

    def observe(self, template: Template) -> None:
        for tok in template.tokens:
            if tok.kind is TokenKind.KEYWORD:
                self.keywords.add(tok.value)

    @classmethod
    def with_types(cls, extra: set[str] | frozenset[str]) -> "TypeCatalog":
        return cls(types=frozenset(DEFAULT_TYPES) | frozenset(extra))


def tokenize_log(raw: str, record_id: int) -> LogRecord:
    """Split a raw line into words on runs of whitespace.

    Raises EmptyLogError for blank input. Joining the words with single
    spaces reproduces the whitespace-normalized line.
    """
    words = tuple(raw.split())
    if not words:
        raise EmptyLogError("blank log line")
    return LogRecord(id=record_id, words=words, raw=raw)


def parse_template(text: str, catalog: TypeCatalog) -> Template:
    """Parse a canonical template string against a type catalog.

    ``[X]`` becomes a placeholder (X must be a catalog type), ``<w>`` a
    keyword, and any bare token is treated as a keyword.
    """
    parts = text.split()
    if not parts:
        raise EmptyTemplateError("template has no tokens")
    tokens: list[TemplateToken] = []
    for part in parts:
        if len(part) >= 3 and part.startswith("[") and part.endswith("]"):
            name = part[1:-1]
            if name not in catalog.types:
                raise UnknownTypeError(name)
            tokens.append(placeholder(name))
        elif len(part) >= 3 and part.startswith("<") and part.endswith(">"):
            tokens.append(keyword(part[1:-1]))
        else:
            tokens.append(keyword(part))
    return Template(tokens=tuple(tokens))


def template_matches(log: LogRecord, template: Template) -> bool:
    """Positional match: keywords must equal the word, placeholders accept any."""
    if len(log.words) != len(template.tokens):
        return False
    for word, tok in zip(log.words, template.tokens):
        if tok.kind is TokenKind.KEYWORD and tok.value != word:
            return False
    return True


def word_count_matches(template: Template, log: LogRecord) -> bool:
    return len(template.tokens) == len(log.words)


def require_word(word: str) -> str:
    if not word:
        raise EmptyWordError("empty word")
    return word
