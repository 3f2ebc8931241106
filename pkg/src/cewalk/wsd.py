"""Word-sense disambiguation via surface-derived concept vectors.

A word-concept vector for a concept is the mean of the word-vector
centroids of all sentences whose network contains that concept. A word in
a sentence is then resolved to the candidate sense whose word-concept
vector is most similar to the sentence centroid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .lexicon import Lexicon
from .sgns import EmbeddingTable, cosine, _read_vectors, _write_vectors
from .sn import ConceptId, SemanticNetwork, parse_concept_id

logger = logging.getLogger(__name__)

__all__ = [
    "WordConceptTable",
    "CentroidStats",
    "sentence_centroid",
    "sentence_centroid_stats",
    "build_word_concept_table",
    "disambiguate",
    "candidate_senses",
    "save_word_concept_table",
    "load_word_concept_table",
]

WCT_TAG = "#WCT"


@dataclass
class CentroidStats:
    vector: np.ndarray
    used: int
    missed: int


def sentence_centroid_stats(tokens: Sequence[str], words: EmbeddingTable) -> CentroidStats:
    """Unweighted mean of in-vocabulary token vectors, with hit/miss counts.

    An all-out-of-vocabulary sentence yields the zero vector.
    """
    total = np.zeros(words.dimension)
    used = 0
    for token in tokens:
        vec = words.get(token)
        if vec is None:
            continue
        total += vec
        used += 1
    if used:
        total /= used
    return CentroidStats(total, used, len(tokens) - used)


def sentence_centroid(tokens: Sequence[str], words: EmbeddingTable) -> np.ndarray:
    return sentence_centroid_stats(tokens, words).vector


@dataclass
class WordConceptTable:
    """Concept -> vector map derived from sentence centroids."""

    dimension: int
    vectors: dict[ConceptId, np.ndarray]
    counts: dict[ConceptId, int]

    def __contains__(self, concept: ConceptId) -> bool:
        return concept in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def vector(self, concept: ConceptId) -> np.ndarray:
        try:
            return self.vectors[concept]
        except KeyError:
            raise KeyError(f"concept not in word-concept table: {concept}") from None

    def concepts(self) -> list[ConceptId]:
        return list(self.vectors)


def build_word_concept_table(
    nets: Iterable[SemanticNetwork], words: EmbeddingTable
) -> WordConceptTable:
    """Average sentence centroids per concept over the networks.

    Networks without surface tokens are skipped (no surface evidence).
    Concepts whose aggregate vector is all-zero, i.e. they occur only in
    fully out-of-vocabulary sentences, are excluded with a warning.
    """
    sums: dict[ConceptId, np.ndarray] = {}
    counts: dict[ConceptId, int] = {}
    for net in nets:
        if not net.tokens:
            continue
        centroid = sentence_centroid(net.surfaces(), words)
        for concept in sorted(net.concept_labels()):
            if concept in sums:
                sums[concept] += centroid
                counts[concept] += 1
            else:
                sums[concept] = centroid.copy()
                counts[concept] = 1
    vectors: dict[ConceptId, np.ndarray] = {}
    for concept, total in sums.items():
        vector = total / counts[concept]
        if not vector.any():
            logger.warning(
                "concept %s occurs only in out-of-vocabulary sentences; excluded", concept
            )
            continue
        vectors[concept] = vector
    return WordConceptTable(
        words.dimension, vectors, {c: counts[c] for c in vectors}
    )


def candidate_senses(
    word: str, lex: Lexicon, lemma_map: Mapping[str, str] | None = None
) -> list[ConceptId]:
    """Sense candidates for a surface word: lexicon first, lemma map fallback."""
    key = word.lower()
    senses = lex.senses_of(key)
    if senses or not lemma_map:
        return senses
    lemma = lemma_map.get(key)
    return lex.senses_of(lemma) if lemma else []


def disambiguate(
    word: str,
    sentence: Sequence[str],
    lex: Lexicon,
    wct: WordConceptTable,
    words: EmbeddingTable,
    lemma_map: Mapping[str, str] | None = None,
) -> ConceptId | None:
    """Pick the candidate sense closest to the sentence centroid.

    Candidates are the lexicon senses of the word's lemma that have a
    word-concept vector. Ties go to the smallest (homograph, polyseme)
    pair; None means no candidate was available.
    """
    candidates = [c for c in candidate_senses(word, lex, lemma_map) if c in wct]
    if not candidates:
        return None
    if len(candidates) == 1:
        return candidates[0]
    centroid = sentence_centroid(sentence, words)
    return min(
        candidates,
        key=lambda c: (-cosine(wct.vector(c), centroid), c.homograph, c.polyseme),
    )


def save_word_concept_table(wct: WordConceptTable, path: str | Path) -> None:
    concepts = wct.concepts()
    matrix = (
        np.vstack([wct.vectors[c] for c in concepts])
        if concepts
        else np.zeros((0, wct.dimension))
    )
    with open(path, "w", encoding="utf-8") as out:
        _write_vectors(out, [c.render() for c in concepts], matrix, tag=WCT_TAG)


def load_word_concept_table(path: str | Path) -> WordConceptTable:
    """Read a table written by :func:`save_word_concept_table`.

    Occurrence counts are not part of the format; loaded tables carry
    placeholder counts of 1.
    """
    with open(path, "r", encoding="utf-8") as stream:
        tokens, matrix = _read_vectors(stream, tag=WCT_TAG)
    concepts = [parse_concept_id(token) for token in tokens]
    return WordConceptTable(
        matrix.shape[1],
        {c: matrix[i] for i, c in enumerate(concepts)},
        {c: 1 for c in concepts},
    )
