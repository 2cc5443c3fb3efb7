"""Bag-of-words tokenization and count vectorization.

The improved token pattern captures the ``=``, ``[`` and ``]`` operators in
addition to letter runs; the legacy pattern is the usual two-or-more word
characters and exists for the ablation path.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field

IMPROVED_PATTERN = r"[a-zA-Z]+|[=\[\]]"
LEGACY_PATTERN = r"\b\w\w+\b"

MODE_IMPROVED = "improved"
MODE_LEGACY = "default_legacy"


class EmptyCorpus(ValueError):
    """fit_vocabulary was given no documents."""


class EmptyVocabulary(ValueError):
    """No token matched anywhere in the corpus."""


@dataclass(frozen=True)
class TokenizerConfig:
    mode: str = MODE_IMPROVED
    lowercase: bool = True
    pattern: str = ""

    def __post_init__(self):
        if self.mode not in (MODE_IMPROVED, MODE_LEGACY):
            raise ValueError(f"unknown tokenizer mode: {self.mode!r}")
        if not self.pattern:
            resolved = IMPROVED_PATTERN if self.mode == MODE_IMPROVED else LEGACY_PATTERN
            object.__setattr__(self, "pattern", resolved)
        elif self.mode == MODE_LEGACY:
            object.__setattr__(self, "pattern", LEGACY_PATTERN)


@dataclass(frozen=True)
class Vocabulary:
    token_to_index: dict[str, int]
    fitted_on: str = ""

    def __len__(self) -> int:
        return len(self.token_to_index)

    @property
    def size(self) -> int:
        return len(self.token_to_index)

    def tokens_sorted(self) -> list[str]:
        # indices are assigned lexicographically, so position == index
        return sorted(self.token_to_index, key=self.token_to_index.__getitem__)

    @classmethod
    def from_tokens(cls, tokens, fitted_on: str = "") -> "Vocabulary":
        return cls({tok: i for i, tok in enumerate(tokens)}, fitted_on=fitted_on)


@dataclass(frozen=True)
class CountVector:
    counts: dict[int, int] = field(default_factory=dict)
    dimension: int = 0

    def sorted_items(self) -> list[tuple[int, int]]:
        return sorted(self.counts.items())

    def get(self, column: int) -> int:
        return self.counts.get(column, 0)

    def total(self) -> int:
        return sum(self.counts.values())


def tokenize(text: str, cfg: TokenizerConfig = TokenizerConfig()) -> list[str]:
    """All non-overlapping, left-to-right matches of the configured pattern."""
    tokens = re.findall(cfg.pattern, text)
    if cfg.lowercase:
        tokens = [tok.lower() for tok in tokens]
    return tokens


def _corpus_fingerprint(corpus, cfg: TokenizerConfig) -> str:
    digest = hashlib.sha256()
    digest.update(f"{cfg.mode}|{cfg.lowercase}|".encode())
    for text in corpus:
        data = text.encode("utf-8")
        digest.update(len(data).to_bytes(8, "little"))
        digest.update(data)
    return digest.hexdigest()


def fit_vocabulary(corpus, cfg: TokenizerConfig = TokenizerConfig()) -> Vocabulary:
    """Build a vocabulary over the corpus token union; indices follow
    lexicographic token order so refits are reproducible."""
    corpus = list(corpus)
    if not corpus:
        raise EmptyCorpus("cannot fit a vocabulary on an empty corpus")
    tokens: set[str] = set()
    for text in corpus:
        tokens.update(tokenize(text, cfg))
    if not tokens:
        raise EmptyVocabulary("no token matched anywhere in the corpus")
    return Vocabulary.from_tokens(sorted(tokens), fitted_on=_corpus_fingerprint(corpus, cfg))


def vectorize(text: str, vocab: Vocabulary,
              cfg: TokenizerConfig = TokenizerConfig()) -> CountVector:
    """Count in-vocabulary token occurrences; out-of-vocabulary tokens are
    silently dropped."""
    index = vocab.token_to_index
    counts = Counter(index[tok] for tok in tokenize(text, cfg) if tok in index)
    return CountVector(counts=dict(counts), dimension=len(index))
