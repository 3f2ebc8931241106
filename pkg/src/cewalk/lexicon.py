"""Sense inventory and lexical links: lemma lookup and noun surrogation.

The lexicon file is line-based UTF-8:

    L <lemma> <concept> <pos> <sort-or-->    one word sense
    X <CHEA|CHPA> <source-concept> <target-concept>   a lexical link
    // comment

CHEA links an eventive concept (verb-derived) to its systematically
related noun, CHPA does the same for a property concept (adjective-derived):
``inform.1.1 -> information.1.1``, ``cold.1.1 -> coldness.1.1``.

A separate lemma-map file (lines of ``<surface-form> <lemma>``) supplies
fallback lemmatization for inflected surface forms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .sn import ConceptId, parse_concept_id

logger = logging.getLogger(__name__)

__all__ = [
    "PartOfSpeech",
    "Sense",
    "LexicalLink",
    "Lexicon",
    "LexiconFormatError",
    "load_lexicon",
    "load_lemma_map",
]

LINK_RELATIONS = ("CHEA", "CHPA")


class LexiconFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PartOfSpeech(str, Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"
    OTHER = "other"


_POS_ALIASES = {
    "noun": PartOfSpeech.NOUN,
    "n": PartOfSpeech.NOUN,
    "verb": PartOfSpeech.VERB,
    "v": PartOfSpeech.VERB,
    "adjective": PartOfSpeech.ADJECTIVE,
    "adj": PartOfSpeech.ADJECTIVE,
    "a": PartOfSpeech.ADJECTIVE,
    "other": PartOfSpeech.OTHER,
}

_LINK_SOURCE_POS = {"CHEA": PartOfSpeech.VERB, "CHPA": PartOfSpeech.ADJECTIVE}


@dataclass(frozen=True)
class Sense:
    concept: ConceptId
    pos: PartOfSpeech
    sort: str | None = None


@dataclass(frozen=True)
class LexicalLink:
    relation: str
    source: ConceptId
    target: ConceptId

    def __post_init__(self):
        if self.relation not in LINK_RELATIONS:
            raise ValueError(f"unsupported lexical relation {self.relation!r}")


@dataclass
class Lexicon:
    """Immutable after load; lemma lookup is case-insensitive."""

    _senses: dict[str, list[Sense]] = field(default_factory=dict)
    _links: dict[ConceptId, list[LexicalLink]] = field(default_factory=dict)

    def add_sense(self, lemma: str, sense: Sense) -> None:
        key = lemma.lower()
        if sense.concept.lemma != key:
            raise ValueError(
                f"sense {sense.concept} does not belong to lemma {lemma!r}"
            )
        bucket = self._senses.setdefault(key, [])
        if any(s.concept == sense.concept for s in bucket):
            raise ValueError(f"duplicate sense {sense.concept} for lemma {lemma!r}")
        bucket.append(sense)

    def add_link(self, link: LexicalLink) -> None:
        self._links.setdefault(link.source, []).append(link)

    def senses_of(self, lemma: str) -> list[ConceptId]:
        """Candidate concepts for a lemma, in lexicon order; [] if unknown."""
        return [s.concept for s in self._senses.get(lemma.lower(), [])]

    def sense_entries(self, lemma: str) -> list[Sense]:
        return list(self._senses.get(lemma.lower(), []))

    def pos_of(self, concept: ConceptId) -> PartOfSpeech | None:
        for sense in self._senses.get(concept.lemma, []):
            if sense.concept == concept:
                return sense.pos
        return None

    def noun_surrogate(self, concept: ConceptId) -> ConceptId:
        """Map an eventive or property concept to its linked noun.

        Follows the first CHEA/CHPA link in file order (warning if there are
        several); concepts without a link come back unchanged.
        """
        links = self._links.get(concept)
        if not links:
            return concept
        if len(links) > 1:
            logger.warning(
                "concept %s has %d lexical links; using the first (%s %s)",
                concept, len(links), links[0].relation, links[0].target,
            )
        return links[0].target

    def links_from(self, concept: ConceptId) -> list[LexicalLink]:
        return list(self._links.get(concept, []))

    def lemmas(self) -> list[str]:
        return list(self._senses)


def _check_link_pos(lexicon: Lexicon, link: LexicalLink, line: int) -> None:
    source_pos = lexicon.pos_of(link.source)
    expected = _LINK_SOURCE_POS[link.relation]
    if source_pos is not None and source_pos is not expected:
        raise LexiconFormatError(
            f"{link.relation} source {link.source} is listed as {source_pos.value}, "
            f"expected {expected.value}",
            line,
        )
    target_pos = lexicon.pos_of(link.target)
    if target_pos is not None and target_pos is not PartOfSpeech.NOUN:
        raise LexiconFormatError(
            f"{link.relation} target {link.target} is listed as {target_pos.value}, "
            f"expected noun",
            line,
        )


def load_lexicon(stream: Iterable[str]) -> Lexicon:
    lexicon = Lexicon()
    links: list[tuple[int, LexicalLink]] = []
    for line_no, raw in enumerate(stream, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("//"):
            continue
        fields = stripped.split()
        tag = fields[0]
        try:
            if tag == "L":
                if len(fields) != 5:
                    raise LexiconFormatError(
                        "sense line must be: L <lemma> <concept> <pos> <sort-or-->", line_no
                    )
                pos = _POS_ALIASES.get(fields[3].lower())
                if pos is None:
                    raise LexiconFormatError(f"unknown part of speech {fields[3]!r}", line_no)
                sort = None if fields[4] == "-" else fields[4]
                lexicon.add_sense(fields[1], Sense(parse_concept_id(fields[2]), pos, sort))
            elif tag == "X":
                if len(fields) != 4:
                    raise LexiconFormatError(
                        "link line must be: X <CHEA|CHPA> <source> <target>", line_no
                    )
                if fields[1] not in LINK_RELATIONS:
                    raise LexiconFormatError(
                        f"link relation must be one of {'/'.join(LINK_RELATIONS)}, "
                        f"got {fields[1]!r}",
                        line_no,
                    )
                link = LexicalLink(fields[1], parse_concept_id(fields[2]), parse_concept_id(fields[3]))
                links.append((line_no, link))
                lexicon.add_link(link)
            else:
                raise LexiconFormatError(f"unknown line tag {tag!r}", line_no)
        except LexiconFormatError:
            raise
        except ValueError as exc:
            raise LexiconFormatError(str(exc), line_no) from exc
    # POS constraints are checked once all senses are known, so link lines
    # may precede the L lines they reference.
    for line_no, link in links:
        _check_link_pos(lexicon, link, line_no)
    return lexicon


def load_lemma_map(stream: Iterable[str]) -> dict[str, str]:
    """Read ``<surface-form> <lemma>`` fallback pairs, keys lowercased."""
    mapping: dict[str, str] = {}
    for line_no, raw in enumerate(stream, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("//"):
            continue
        fields = stripped.split()
        if len(fields) != 2:
            raise LexiconFormatError("lemma map line must be: <surface> <lemma>", line_no)
        surface, lemma = fields
        key = surface.lower()
        if key in mapping and mapping[key] != lemma.lower():
            raise LexiconFormatError(f"conflicting lemma for surface {surface!r}", line_no)
        mapping[key] = lemma.lower()
    return mapping
