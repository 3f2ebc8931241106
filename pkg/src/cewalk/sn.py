"""Semantic-network domain model and the MNSN v1 interchange format.

A semantic network here is a directed labeled multigraph for one sentence:
nodes are either lexical (carrying a disambiguated concept) or inner
(unnamed placeholders such as ``c1``), arcs carry uppercase relation names
(AGT, SUB, OBJ, ...). Networks are read from and written to MNSN v1, a
line-based UTF-8 text format:

    #S <sentence-id>           starts a block
    T <index> <surface> <concept-or-->    one surface token (- = no concept)
    N <node-id> <concept-or--> <sort-or--> [key=value ...]   a node
    E <from-id> <RELATION> <to-id>        an arc
    // comment                 ignored anywhere
    <blank line>               ends the block

Concept names are ``lemma.h.p`` for lexical word senses (homograph h >= 1,
polyseme p >= 1) or ``lemma.0`` for proper names; multiword lemmas use
underscores (``new_york.0``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, TextIO

__all__ = [
    "ConceptId",
    "Relation",
    "SnNode",
    "SnEdge",
    "SnToken",
    "SemanticNetwork",
    "SortTaxonomy",
    "SnFormatError",
    "parse_concept_id",
    "parse_sn_document",
    "serialize_sn_document",
    "load_sort_taxonomy",
]

_INT_RE = re.compile(r"^[0-9]+$")
_RELATION_RE = re.compile(r"^[A-Z][A-Z0-9*._+-]*$")


class SnFormatError(ValueError):
    """Malformed MNSN input. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, order=True)
class ConceptId:
    """A disambiguated word sense (``lemma.h.p``) or proper name (``lemma.0``)."""

    lemma: str
    homograph: int
    polyseme: int

    def __post_init__(self):
        if not self.lemma:
            raise ValueError("concept lemma must be nonempty")
        if any(ch.isspace() for ch in self.lemma) or "." in self.lemma:
            raise ValueError(f"concept lemma may not contain whitespace or dots: {self.lemma!r}")
        if self.lemma != self.lemma.lower():
            raise ValueError(f"concept lemma must be lowercase: {self.lemma!r}")
        proper = self.homograph == 0 and self.polyseme == 0
        lexical = self.homograph >= 1 and self.polyseme >= 1
        if not (proper or lexical):
            raise ValueError(
                f"concept sense numbers must both be >= 1, or both 0 for a proper name: "
                f"{self.lemma}.{self.homograph}.{self.polyseme}"
            )

    @property
    def is_proper_name(self) -> bool:
        return self.homograph == 0

    @classmethod
    def proper_name(cls, lemma: str) -> "ConceptId":
        return cls(lemma, 0, 0)

    def render(self) -> str:
        if self.is_proper_name:
            return f"{self.lemma}.0"
        return f"{self.lemma}.{self.homograph}.{self.polyseme}"

    def __str__(self) -> str:
        return self.render()


def parse_concept_id(token: str) -> ConceptId:
    """Parse ``lemma.h.p`` or ``lemma.0`` into a :class:`ConceptId`.

    The lemma is folded to lowercase. Raises ``ValueError`` for anything
    that is not one of the two rendered forms.
    """
    if not token:
        raise ValueError("empty concept token")
    parts = token.split(".")
    if len(parts) == 1:
        raise ValueError(f"concept {token!r} has no sense suffix")
    if len(parts) == 2:
        lemma, suffix = parts
        if not _INT_RE.match(suffix):
            raise ValueError(f"concept {token!r} has a non-integer sense suffix")
        if suffix != "0":
            raise ValueError(
                f"concept {token!r}: a single sense suffix must be 0 (proper name)"
            )
        return ConceptId.proper_name(lemma.lower())
    if len(parts) == 3:
        lemma, hom, pol = parts
        if not (_INT_RE.match(hom) and _INT_RE.match(pol)):
            raise ValueError(f"concept {token!r} has non-integer sense suffixes")
        h, p = int(hom), int(pol)
        if h == 0 or p == 0:
            raise ValueError(f"concept {token!r}: homograph and polyseme must be >= 1")
        return ConceptId(lemma.lower(), h, p)
    raise ValueError(f"concept {token!r} has too many dot-separated fields")


@dataclass(frozen=True)
class Relation:
    """An arc label. The symmetric flag comes from a per-run configuration set."""

    name: str
    symmetric: bool = False

    def __post_init__(self):
        if not _RELATION_RE.match(self.name):
            raise ValueError(f"invalid relation name: {self.name!r}")


@dataclass(frozen=True)
class SnNode:
    node_id: str
    concept: ConceptId | None = None
    sort: str | None = None
    layer_features: tuple[tuple[str, str], ...] = ()

    @property
    def is_inner(self) -> bool:
        return self.concept is None

    def features(self) -> dict[str, str]:
        return dict(self.layer_features)


@dataclass(frozen=True)
class SnEdge:
    source: str
    relation: Relation
    target: str


@dataclass(frozen=True)
class SnToken:
    surface: str
    concept: ConceptId | None = None


@dataclass
class SemanticNetwork:
    """One sentence's graph plus (optionally) its surface token sequence.

    Treated as immutable once built; instances are safe to share read-only.
    """

    sentence_id: str
    nodes: dict[str, SnNode] = field(default_factory=dict)
    edges: list[SnEdge] = field(default_factory=list)
    tokens: list[SnToken] = field(default_factory=list)

    def __post_init__(self):
        for node_id, node in self.nodes.items():
            if node.node_id != node_id:
                raise ValueError(f"node key {node_id!r} does not match node id {node.node_id!r}")
        for edge in self.edges:
            for endpoint in (edge.source, edge.target):
                if endpoint not in self.nodes:
                    raise ValueError(
                        f"network {self.sentence_id!r}: edge references unknown node {endpoint!r}"
                    )
        labels = self.concept_labels()
        for token in self.tokens:
            if token.concept is not None and token.concept not in labels:
                raise ValueError(
                    f"network {self.sentence_id!r}: token concept {token.concept} "
                    f"is not a node label"
                )

    def node_order(self) -> list[str]:
        return list(self.nodes)

    def inner_node_ids(self) -> list[str]:
        return [n.node_id for n in self.nodes.values() if n.is_inner]

    def concept_labels(self) -> set[ConceptId]:
        return {n.concept for n in self.nodes.values() if n.concept is not None}

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


def _parse_optional_concept(text: str) -> ConceptId | None:
    return None if text == "-" else parse_concept_id(text)


def parse_sn_document(
    stream: Iterable[str],
    symmetric_relations: frozenset[str] | set[str] = frozenset(),
) -> list[SemanticNetwork]:
    """Parse an MNSN v1 stream into one network per ``#S`` block, in order.

    Unknown relation names are accepted and treated as non-symmetric unless
    they appear in *symmetric_relations*. Errors report 1-based line numbers.
    """
    networks: list[SemanticNetwork] = []
    sentence_id: str | None = None
    nodes: dict[str, SnNode] = {}
    edges: list[tuple[int, str, str, str]] = []  # (line, from, relation, to)
    tokens: list[SnToken] = []
    last_token_index = -1
    block_start_line = 0

    def close_block():
        nonlocal sentence_id, nodes, edges, tokens, last_token_index
        if sentence_id is None:
            return
        resolved: list[SnEdge] = []
        for line_no, src, rel_name, dst in edges:
            for endpoint in (src, dst):
                if endpoint not in nodes:
                    raise SnFormatError(f"edge references unknown node {endpoint!r}", line_no)
            relation = Relation(rel_name, symmetric=rel_name in symmetric_relations)
            resolved.append(SnEdge(src, relation, dst))
        try:
            networks.append(
                SemanticNetwork(sentence_id, dict(nodes), resolved, list(tokens))
            )
        except ValueError as exc:
            raise SnFormatError(str(exc), block_start_line) from exc
        sentence_id = None
        nodes = {}
        edges = []
        tokens = []
        last_token_index = -1

    for line_no, raw in enumerate(stream, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        stripped = line.strip()
        if stripped.startswith("//"):
            continue
        if not stripped:
            close_block()
            continue
        fields = stripped.split()
        tag = fields[0]
        if tag == "#S":
            close_block()
            sentence_id = stripped[2:].strip()
            if not sentence_id:
                raise SnFormatError("#S line is missing a sentence id", line_no)
            block_start_line = line_no
            continue
        if sentence_id is None:
            raise SnFormatError(f"{tag!r} line outside a #S block", line_no)
        try:
            if tag == "T":
                if len(fields) != 4:
                    raise SnFormatError("token line must be: T <index> <surface> <concept-or-->", line_no)
                if not _INT_RE.match(fields[1]):
                    raise SnFormatError(f"token index {fields[1]!r} is not an integer", line_no)
                index = int(fields[1])
                if index <= last_token_index:
                    raise SnFormatError(f"token index {index} is not strictly increasing", line_no)
                last_token_index = index
                tokens.append(SnToken(fields[2], _parse_optional_concept(fields[3])))
            elif tag == "N":
                if len(fields) < 4:
                    raise SnFormatError(
                        "node line must be: N <node-id> <concept-or--> <sort-or--> [key=value ...]",
                        line_no,
                    )
                node_id = fields[1]
                if node_id in nodes:
                    raise SnFormatError(f"duplicate node id {node_id!r}", line_no)
                concept = _parse_optional_concept(fields[2])
                sort = None if fields[3] == "-" else fields[3]
                features = []
                for item in fields[4:]:
                    key, sep, value = item.partition("=")
                    if not sep or not key:
                        raise SnFormatError(f"malformed layer feature {item!r}", line_no)
                    features.append((key, value))
                nodes[node_id] = SnNode(node_id, concept, sort, tuple(features))
            elif tag == "E":
                if len(fields) != 4:
                    raise SnFormatError("edge line must be: E <from-id> <RELATION> <to-id>", line_no)
                if not _RELATION_RE.match(fields[2]):
                    raise SnFormatError(f"invalid relation name {fields[2]!r}", line_no)
                edges.append((line_no, fields[1], fields[2], fields[3]))
            else:
                raise SnFormatError(f"unknown line tag {tag!r}", line_no)
        except SnFormatError:
            raise
        except ValueError as exc:
            raise SnFormatError(str(exc), line_no) from exc
    close_block()
    return networks


def serialize_sn_document(networks: Iterable[SemanticNetwork], out: TextIO) -> None:
    """Write networks in MNSN v1; parsing the output reproduces them structurally."""
    first = True
    for net in networks:
        if not first:
            out.write("\n")
        first = False
        out.write(f"#S {net.sentence_id}\n")
        for index, token in enumerate(net.tokens):
            concept = token.concept.render() if token.concept else "-"
            out.write(f"T {index} {token.surface} {concept}\n")
        for node in net.nodes.values():
            concept = node.concept.render() if node.concept else "-"
            sort = node.sort if node.sort is not None else "-"
            extras = "".join(
                f" {key}={value}" for key, value in sorted(node.layer_features)
            )
            out.write(f"N {node.node_id} {concept} {sort}{extras}\n")
        for edge in net.edges:
            out.write(f"E {edge.source} {edge.relation.name} {edge.target}\n")


@dataclass
class SortTaxonomy:
    """Rooted tree of semantic sorts; loaded from an optional side file."""

    parents: dict[str, str | None]
    root: str

    def __contains__(self, name: str) -> bool:
        return name in self.parents

    def ancestors(self, name: str) -> list[str]:
        chain = []
        current = self.parents[name]
        while current is not None:
            chain.append(current)
            current = self.parents[current]
        return chain


def load_sort_taxonomy(stream: Iterable[str]) -> SortTaxonomy:
    """Read a sort taxonomy from lines of ``<name> <parent-or-->``."""
    parents: dict[str, str | None] = {}
    pending: list[tuple[int, str, str | None]] = []
    for line_no, raw in enumerate(stream, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("//"):
            continue
        fields = stripped.split()
        if len(fields) != 2:
            raise SnFormatError("sort line must be: <name> <parent-or-->", line_no)
        name, parent = fields
        if name in parents or any(name == n for _, n, _ in pending):
            raise SnFormatError(f"duplicate sort name {name!r}", line_no)
        pending.append((line_no, name, None if parent == "-" else parent))
    for _, name, parent in pending:
        parents[name] = parent
    roots = [n for n, p in parents.items() if p is None]
    if len(roots) != 1:
        raise SnFormatError(f"taxonomy must have exactly one root, found {len(roots)}")
    for line_no, name, parent in pending:
        if parent is not None and parent not in parents:
            raise SnFormatError(f"sort {name!r} names unknown parent {parent!r}", line_no)
    for name in parents:
        seen = {name}
        current = parents[name]
        while current is not None:
            if current in seen:
                raise SnFormatError(f"sort taxonomy contains a cycle through {name!r}")
            seen.add(current)
            current = parents[current]
    return SortTaxonomy(parents, roots[0])
