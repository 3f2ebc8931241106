"""Random walks over semantic networks, serialized as training corpora.

A raw walk alternates node tokens and relation tokens. Traversing an arc
against its direction emits the inverse relation, rendered with a ``~``
suffix (``TEMP~``); symmetric relations are never inverted. Inner nodes are
either removed from the finished walk or replaced by their sort name.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Iterator, Protocol

from .sn import ConceptId, SemanticNetwork

__all__ = [
    "InnerNodePolicy",
    "WalkToken",
    "WalkSequence",
    "WalkConfig",
    "MissingSortError",
    "random_walk",
    "elide_inner_nodes",
    "generate_corpus",
    "write_corpus",
    "derive_network_seed",
]


class MissingSortError(ValueError):
    """Sort replacement was requested for an inner node that has no sort."""

    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"inner node {node_id!r} has no sort to substitute")


class InnerNodePolicy(str, Enum):
    ELIDE = "elide"
    REPLACE_WITH_SORT = "sort"


class RandomSource(Protocol):
    """What a walk consumes: ``random.Random`` satisfies this, as do test stubs."""

    def random(self) -> float: ...

    def randrange(self, stop: int) -> int: ...


@dataclass(frozen=True)
class WalkToken:
    """One walk token: concept, relation, inner-node marker, or sort name.

    Exactly one of the four payload fields is set; inner markers occur only
    in raw walks, sort names only after sort substitution.
    """

    concept: ConceptId | None = None
    relation: str | None = None
    inverted: bool = False
    inner_id: str | None = None
    sort: str | None = None

    def __post_init__(self):
        payload = [self.concept, self.relation, self.inner_id, self.sort]
        if sum(x is not None for x in payload) != 1:
            raise ValueError("walk token must carry exactly one payload")
        if self.inverted and self.relation is None:
            raise ValueError("only relation tokens can be inverted")

    @property
    def is_concept(self) -> bool:
        return self.concept is not None

    @property
    def is_relation(self) -> bool:
        return self.relation is not None

    @property
    def is_inner(self) -> bool:
        return self.inner_id is not None

    def text(self) -> str:
        if self.concept is not None:
            return self.concept.render()
        if self.relation is not None:
            return self.relation + "~" if self.inverted else self.relation
        if self.sort is not None:
            return self.sort
        return self.inner_id  # type: ignore[return-value]


@dataclass
class WalkSequence:
    tokens: list[WalkToken] = field(default_factory=list)

    def text(self) -> str:
        return " ".join(tok.text() for tok in self.tokens)

    def step_count(self) -> int:
        """Number of edge traversals, i.e. relation tokens."""
        return sum(1 for tok in self.tokens if tok.is_relation)


@dataclass(frozen=True)
class WalkConfig:
    stop_threshold: float = 0.05
    max_steps: int = 40
    walks_per_network: int = 10
    inner_node_policy: InnerNodePolicy = InnerNodePolicy.ELIDE
    rng_seed: int = 1

    def __post_init__(self):
        if not 0.0 < self.stop_threshold < 0.5:
            raise ValueError("stop_threshold must lie in (0, 0.5)")
        if self.max_steps < 1:
            raise ValueError("max_steps must be positive")
        if self.walks_per_network < 1:
            raise ValueError("walks_per_network must be positive")


def _node_token(net: SemanticNetwork, node_id: str) -> WalkToken:
    node = net.nodes[node_id]
    if node.is_inner:
        return WalkToken(inner_id=node_id)
    return WalkToken(concept=node.concept)


def _incident_slots(net: SemanticNetwork) -> dict[str, list[tuple[int, bool]]]:
    """Per node: (edge index, forward?) slots in edge declaration order.

    Parallel edges get separate slots; a self-loop contributes one forward
    and one backward slot.
    """
    slots: dict[str, list[tuple[int, bool]]] = {node_id: [] for node_id in net.nodes}
    for index, edge in enumerate(net.edges):
        slots[edge.source].append((index, True))
        slots[edge.target].append((index, False))
    return slots


def random_walk(net: SemanticNetwork, cfg: WalkConfig, rng: RandomSource) -> WalkSequence:
    """One raw walk: uniform start node, uniform incident-edge steps.

    After each step a uniform draw below ``cfg.stop_threshold`` stops the
    walk; ``cfg.max_steps`` caps it. Edges may repeat, including immediate
    backtracking. The walk consumes the random source only through
    ``rng.randrange`` (choices) and ``rng.random`` (stop draws).
    """
    order = net.node_order()
    if not order:
        raise ValueError(f"network {net.sentence_id!r} has no nodes")
    slots = _incident_slots(net)
    current = order[rng.randrange(len(order))]
    tokens = [_node_token(net, current)]
    for _ in range(cfg.max_steps):
        incident = slots[current]
        if not incident:
            break
        edge_index, forward = incident[rng.randrange(len(incident))]
        edge = net.edges[edge_index]
        inverted = (not forward) and not edge.relation.symmetric
        tokens.append(WalkToken(relation=edge.relation.name, inverted=inverted))
        current = edge.target if forward else edge.source
        tokens.append(_node_token(net, current))
        if rng.random() < cfg.stop_threshold:
            break
    return WalkSequence(tokens)


def elide_inner_nodes(
    walk: WalkSequence,
    policy: InnerNodePolicy,
    sort_of: Callable[[str], str | None] | None = None,
) -> WalkSequence:
    """Drop inner-node tokens, or substitute their sort names.

    Relation tokens keep their order. Sort substitution requires *sort_of*
    to yield a sort for every inner node encountered.
    """
    result: list[WalkToken] = []
    for token in walk.tokens:
        if not token.is_inner:
            result.append(token)
            continue
        if policy is InnerNodePolicy.ELIDE:
            continue
        sort = sort_of(token.inner_id) if sort_of is not None else None
        if sort is None:
            raise MissingSortError(token.inner_id)
        result.append(WalkToken(sort=sort))
    return WalkSequence(result)


def derive_network_seed(rng_seed: int, sentence_id: str) -> int:
    """Stable per-network seed; independent of processing order and platform."""
    digest = hashlib.blake2b(
        f"{rng_seed}\x1f{sentence_id}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def generate_corpus(nets: Iterable[SemanticNetwork], cfg: WalkConfig) -> Iterator[str]:
    """Yield ``cfg.walks_per_network`` finished walk lines per network.

    Each network draws from its own random stream seeded from
    ``(cfg.rng_seed, sentence_id)``, so the corpus is reproducible and
    insensitive to network processing order.
    """
    for net in nets:
        rng = random.Random(derive_network_seed(cfg.rng_seed, net.sentence_id))
        sort_of = lambda node_id: net.nodes[node_id].sort  # noqa: E731
        for _ in range(cfg.walks_per_network):
            raw = random_walk(net, cfg, rng)
            yield elide_inner_nodes(raw, cfg.inner_node_policy, sort_of).text()


def write_corpus(nets: Iterable[SemanticNetwork], cfg: WalkConfig, out) -> int:
    """Write one walk per line; returns the number of lines written."""
    count = 0
    for line in generate_corpus(nets, cfg):
        out.write(line + "\n")
        count += 1
    return count
