"""Document-level similarity estimators over token lists.

The word route compares bag-of-embedding centroids and takes the maximum
over the raw and per-token-capitalized variants of side a (keyword lists
are capitalized nouns, user answers often are not). The concept route
disambiguates both texts, maps verbs/adjectives to their noun surrogates,
and compares concept-embedding centroids. Estimators also come combined
(weighted mean), concatenated (joint word+auxiliary vectors), and as a
token-set Jaccard baseline. A beam search over keyword orderings serves
sequence-sensitive scorers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .lexicon import Lexicon
from .sgns import EmbeddingTable, cosine
from .wsd import WordConceptTable, disambiguate, sentence_centroid_stats

__all__ = [
    "SimilarityEstimate",
    "CombinationWeights",
    "sim_words",
    "sim_concepts",
    "sim_combined",
    "sim_concatenated",
    "sim_jaccard",
    "beam_permutation_score",
    "capitalize_tokens",
]

SequenceScorer = Callable[[Sequence[str], Sequence[str]], float]


@dataclass
class SimilarityEstimate:
    value: float
    method: str
    diagnostics: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"similarity estimate must be finite, got {self.value!r}")


@dataclass(frozen=True)
class CombinationWeights:
    ce_weight: float
    word_weight: float

    def __post_init__(self):
        if self.ce_weight < 0 or self.word_weight < 0:
            raise ValueError("combination weights must be non-negative")
        if abs(self.ce_weight + self.word_weight - 1.0) > 1e-9:
            raise ValueError(
                f"combination weights must sum to 1, got "
                f"{self.ce_weight} + {self.word_weight}"
            )


def capitalize_tokens(tokens: Sequence[str]) -> list[str]:
    """Uppercase each token's first letter, leaving the rest untouched."""
    return [t[:1].upper() + t[1:] for t in tokens]


def sim_words(
    text_a: Sequence[str], text_b: Sequence[str], words: EmbeddingTable
) -> SimilarityEstimate:
    """Centroid cosine, maximized over raw and capitalized variants of side a.

    Only side a is capitalization-expanded, so this estimator is
    deliberately asymmetric. Zero centroids contribute a 0 branch value.
    """
    plain = sentence_centroid_stats(text_a, words)
    caps = sentence_centroid_stats(capitalize_tokens(text_a), words)
    side_b = sentence_centroid_stats(text_b, words)
    diagnostics = {
        "oov_a": plain.missed,
        "oov_a_capitalized": caps.missed,
        "oov_b": side_b.missed,
    }
    if (plain.used == 0 and caps.used == 0) or side_b.used == 0:
        diagnostics["zero_centroid"] = 1
        return SimilarityEstimate(0.0, "words", diagnostics)
    value = max(cosine(plain.vector, side_b.vector), cosine(caps.vector, side_b.vector))
    return SimilarityEstimate(value, "words", diagnostics)


def _concept_centroid(
    tokens: Sequence[str],
    lex: Lexicon,
    wct: WordConceptTable,
    words: EmbeddingTable,
    concepts: EmbeddingTable,
    lemma_map: Mapping[str, str] | None,
) -> tuple[np.ndarray, int, int, int]:
    """Disambiguate, surrogate, and average; returns (centroid, resolved, nosense, misses)."""
    total = np.zeros(concepts.dimension)
    resolved = 0
    nosense = 0
    misses = 0
    for token in tokens:
        sense = disambiguate(token, tokens, lex, wct, words, lemma_map)
        if sense is None:
            nosense += 1
            continue
        vec = concepts.get(lex.noun_surrogate(sense).render())
        if vec is None:
            misses += 1
            continue
        total += vec
        resolved += 1
    if resolved:
        total /= resolved
    return total, resolved, nosense, misses


def sim_concepts(
    text_a: Sequence[str],
    text_b: Sequence[str],
    lex: Lexicon,
    wct: WordConceptTable,
    words: EmbeddingTable,
    concepts: EmbeddingTable,
    lemma_map: Mapping[str, str] | None = None,
) -> SimilarityEstimate:
    """Cosine of concept-embedding centroids after per-token disambiguation."""
    vec_a, used_a, nosense_a, miss_a = _concept_centroid(
        text_a, lex, wct, words, concepts, lemma_map
    )
    vec_b, used_b, nosense_b, miss_b = _concept_centroid(
        text_b, lex, wct, words, concepts, lemma_map
    )
    diagnostics = {
        "nosense_a": nosense_a,
        "nosense_b": nosense_b,
        "ce_miss_a": miss_a,
        "ce_miss_b": miss_b,
    }
    if used_a == 0 or used_b == 0:
        diagnostics["unresolved_side"] = 1
        return SimilarityEstimate(0.0, "concepts", diagnostics)
    return SimilarityEstimate(cosine(vec_a, vec_b), "concepts", diagnostics)


def sim_combined(
    text_a: Sequence[str],
    text_b: Sequence[str],
    weights: CombinationWeights,
    lex: Lexicon,
    wct: WordConceptTable,
    words: EmbeddingTable,
    concepts: EmbeddingTable,
    lemma_map: Mapping[str, str] | None = None,
) -> SimilarityEstimate:
    """Weighted mean of the concept and word estimates."""
    ce = sim_concepts(text_a, text_b, lex, wct, words, concepts, lemma_map)
    w2v = sim_words(text_a, text_b, words)
    diagnostics = {f"concepts_{k}": v for k, v in ce.diagnostics.items()}
    diagnostics.update({f"words_{k}": v for k, v in w2v.diagnostics.items()})
    value = weights.ce_weight * ce.value + weights.word_weight * w2v.value
    return SimilarityEstimate(value, "combined", diagnostics)


def _concatenated_centroid(
    tokens: Sequence[str], words: EmbeddingTable, aux: EmbeddingTable
) -> tuple[np.ndarray, int, dict[str, int]]:
    dim_w, dim_x = words.dimension, aux.dimension
    total = np.zeros(dim_w + dim_x)
    used = 0
    diag = {"word_half_missing": 0, "aux_half_missing": 0, "oov_both": 0}
    for token in tokens:
        wv = words.get(token)
        xv = aux.get(token)
        if wv is None and xv is None:
            diag["oov_both"] += 1
            continue
        if wv is None:
            diag["word_half_missing"] += 1
            wv = np.zeros(dim_w)
        if xv is None:
            diag["aux_half_missing"] += 1
            xv = np.zeros(dim_x)
        total += np.concatenate([wv, xv])
        used += 1
    if used:
        total /= used
    return total, used, diag


def sim_concatenated(
    text_a: Sequence[str],
    text_b: Sequence[str],
    words: EmbeddingTable,
    aux: EmbeddingTable,
) -> SimilarityEstimate:
    """Cosine of centroids over concatenated word+auxiliary vectors.

    A missing half is zero-padded (and counted); tokens unknown to both
    tables are skipped.
    """
    vec_a, used_a, diag_a = _concatenated_centroid(text_a, words, aux)
    vec_b, used_b, diag_b = _concatenated_centroid(text_b, words, aux)
    diagnostics = {f"{k}_a": v for k, v in diag_a.items()}
    diagnostics.update({f"{k}_b": v for k, v in diag_b.items()})
    if used_a == 0 or used_b == 0:
        diagnostics["zero_centroid"] = 1
        return SimilarityEstimate(0.0, "concat", diagnostics)
    return SimilarityEstimate(cosine(vec_a, vec_b), "concat", diagnostics)


def sim_jaccard(text_a: Sequence[str], text_b: Sequence[str]) -> SimilarityEstimate:
    """Set overlap of case-folded tokens; two empty texts score 0."""
    set_a = {t.casefold() for t in text_a}
    set_b = {t.casefold() for t in text_b}
    union = set_a | set_b
    value = len(set_a & set_b) / len(union) if union else 0.0
    return SimilarityEstimate(value, "jaccard", {})


def beam_permutation_score(
    keywords: Sequence[str],
    answer: Sequence[str],
    scorer: SequenceScorer,
    beam_width: int,
) -> tuple[list[str], float]:
    """Best keyword ordering under *scorer*, found by beam search.

    Partial orderings grow one unused keyword at a time; only the
    ``beam_width`` best partials per length survive. Score ties are broken
    by keyword position, so the result is deterministic. With
    ``beam_width`` at least the number of partials per length this equals
    the exhaustive maximum over all permutations.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    if not keywords:
        return [], scorer((), answer)
    beam: list[tuple[float, tuple[int, ...]]] = [
        (scorer((kw,), answer), (i,)) for i, kw in enumerate(keywords)
    ]
    beam.sort(key=lambda item: (-item[0], item[1]))
    del beam[beam_width:]
    for _ in range(1, len(keywords)):
        candidates: list[tuple[float, tuple[int, ...]]] = []
        for _, order in beam:
            used = set(order)
            for i, kw in enumerate(keywords):
                if i in used:
                    continue
                extended = order + (i,)
                prefix = [keywords[j] for j in extended]
                candidates.append((scorer(prefix, answer), extended))
        candidates.sort(key=lambda item: (-item[0], item[1]))
        beam = candidates[:beam_width]
    score, order = beam[0]
    return [keywords[i] for i in order], score
