"""Deterministic text preprocessing shared by every other module.

Tokenization, camel-case decomposition, stop-word removal and lower-case
normalization. No stemming, ever: reformulated queries must contain real
words, not stems.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources

# Token origins.
WHOLE = "whole"
CAMEL_PART = "camel_part"

# Preprocessing modes.
SPLIT_ONLY = "split_only"
SPLIT_AND_KEEP_WHOLE = "split_and_keep_whole"

_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")

# Camel boundaries: before an upper that follows a lower/digit ("restClient",
# "utf8Codec"), and between an upper run and a trailing Upper+lower word
# ("XMLHttp" -> "XML|Http"). Zero-width, so parts always concatenate back.
_CAMEL_BOUNDARY_RE = re.compile(r"(?<=[a-z0-9])(?=[A-Z])|(?<=[A-Z])(?=[A-Z][a-z])")


@dataclass(frozen=True)
class Token:
    """One preprocessed token: original surface plus lower-cased form."""

    surface: str
    normalized: str
    origin: str  # WHOLE or CAMEL_PART

    @classmethod
    def from_surface(cls, surface: str, origin: str = WHOLE) -> "Token":
        return cls(surface=surface, normalized=surface.lower(), origin=origin)


@dataclass
class TermSequence:
    """Ordered token list derived from one title, query, or document."""

    tokens: list[Token] = field(default_factory=list)
    source_id: str = ""

    def normalized(self) -> list[str]:
        return [t.normalized for t in self.tokens]

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __bool__(self) -> bool:
        return bool(self.tokens)


def words_sha(words) -> str:
    """Hash of a canonicalized word set; identifies word lists in file meta."""
    canon = "\n".join(sorted(set(words))).encode("utf-8")
    return hashlib.sha256(canon).hexdigest()


class StopList:
    """Immutable set of stop words, matched against normalized tokens."""

    def __init__(self, words: set[str], source_path: str = "<memory>"):
        self.words = frozenset(w.lower() for w in words)
        self.source_path = source_path

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    @property
    def sha(self) -> str:
        return words_sha(self.words)

    @classmethod
    def from_file(cls, path) -> "StopList":
        words = _read_word_file(str(path))
        return cls(words, source_path=str(path))


def _read_word_file(path: str) -> set[str]:
    """One word per line, `#` starts a comment, blank lines ignored."""
    words: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            word = line.split("#", 1)[0].strip()
            if word:
                words.add(word.lower())
    return words


def _bundled_words(name: str) -> set[str]:
    ref = resources.files("quickar.data").joinpath(name)
    words: set[str] = set()
    for line in ref.read_text(encoding="utf-8").splitlines():
        word = line.split("#", 1)[0].strip()
        if word:
            words.add(word.lower())
    return words


def default_stoplist() -> StopList:
    """The bundled English stop list (does not contain direction words)."""
    return StopList(_bundled_words("stopwords.txt"), source_path="<bundled:stopwords.txt>")


def load_stoplist(path: str | None) -> StopList:
    """Stop list from `path`, or the bundled default when path is None."""
    if path is None:
        return default_stoplist()
    return StopList.from_file(path)


def default_language_keywords() -> frozenset[str]:
    """Bundled Java reserved words, for corpus preprocessing."""
    return frozenset(_bundled_words("java_keywords.txt"))


def load_language_keywords(path: str | None) -> frozenset[str]:
    if path is None:
        return default_language_keywords()
    return frozenset(_read_word_file(str(path)))


def tokenize(text: str) -> list[str]:
    """Split raw text into alphanumeric fragments.

    Splits on any non-alphanumeric character; empty and pure-digit fragments
    are discarded, mixed alphanumerics ("utf8") are kept whole. Surfaces keep
    their original casing.

    >>> tokenize("memory leak/garbage-collection issue")
    ['memory', 'leak', 'garbage', 'collection', 'issue']
    >>> tokenize("")
    []
    """
    return [frag for frag in _TOKEN_RE.findall(text) if not frag.isdigit()]


def split_camel(token: str) -> list[str]:
    """Split one identifier at camel-case boundaries, preserving casing.

    Lower-to-upper transitions and acronym boundaries (an upper-case run
    followed by Upper+lower splits before the last upper) both break the
    token; single-case tokens come back unchanged. Parts always concatenate
    to exactly the input.

    >>> split_camel("GenericContainerInstantiator")
    ['Generic', 'Container', 'Instantiator']
    >>> split_camel("XMLHttpRequest")
    ['XML', 'Http', 'Request']
    >>> split_camel("memory")
    ['memory']
    """
    return _CAMEL_BOUNDARY_RE.split(token)


def preprocess(
    text: str,
    stops: StopList,
    mode: str = SPLIT_ONLY,
    source_id: str = "",
    extra_drop: frozenset[str] | None = None,
) -> TermSequence:
    """Tokenize, camel-split, and stop-filter `text` into a TermSequence.

    In SPLIT_AND_KEEP_WHOLE mode every multi-part camel token also
    contributes its whole form, right after its parts. Stop words (and any
    `extra_drop` words, e.g. language keywords) are removed after
    normalization, so camel parts are filtered too. Pure-digit camel parts
    are dropped. No stemming.
    """
    if mode not in (SPLIT_ONLY, SPLIT_AND_KEEP_WHOLE):
        raise ValueError(f"unknown preprocessing mode: {mode!r}")
    tokens: list[Token] = []
    for raw in tokenize(text):
        parts = split_camel(raw)
        if len(parts) == 1:
            candidates = [Token.from_surface(raw, WHOLE)]
        else:
            candidates = [
                Token.from_surface(p, CAMEL_PART) for p in parts if not p.isdigit()
            ]
            if mode == SPLIT_AND_KEEP_WHOLE:
                candidates.append(Token.from_surface(raw, WHOLE))
        for tok in candidates:
            if tok.normalized in stops:
                continue
            if extra_drop and tok.normalized in extra_drop:
                continue
            tokens.append(tok)
    return TermSequence(tokens=tokens, source_id=source_id)
