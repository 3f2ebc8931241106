import numpy as np
import pytest

from cewalk.sgns import EmbeddingTable, Vocabulary
from cewalk.sn import parse_sn_document

# The worked example network: one sentence about buying a fast red car,
# with four unnamed inner nodes (c1..c4) and ten labeled arcs.
FIG1_MNSN = """\
// worked example: the car he bought yesterday in new york is a fast red ferrari
#S fig1
T 0 the -
T 1 car car.1.1
T 2 he he.1.1
T 3 bought buy.1.1
T 4 yesterday yesterday.1.1
T 5 in -
T 6 new_york new_york.0
T 7 is -
T 8 a -
T 9 fast fast.1.1
T 10 red red.1.1
T 11 ferrari ferrari.1.1
N c1 - -
N he he.1.1 -
N c2 - -
N buy buy.1.1 -
N c3 - -
N ferrari ferrari.1.1 -
N fast fast.1.1 -
N red red.1.1 -
N c4 - -
N ny new_york.0 -
N yest yesterday.1.1 -
N car car.1.1 -
E c1 AGT he
E c1 SUBS buy
E c1 OBJ c2
E c1 LOC ny
E c1 TEMP yest
E c2 PROP c3
E c2 SUB ferrari
E ferrari SUB car
E c3 MODP* red
E c3 PROP fast
"""

FIG1_RELATION_NAMES = {"AGT", "SUBS", "OBJ", "LOC", "TEMP", "PROP", "SUB", "MODP*"}


@pytest.fixture
def fig1_net():
    [net] = parse_sn_document(FIG1_MNSN.splitlines())
    return net


class ScriptedRandom:
    """Replays queued draws; the walk generator only needs these two methods."""

    def __init__(self, randrange_values=(), random_values=()):
        self.randrange_values = list(randrange_values)
        self.random_values = list(random_values)

    def randrange(self, stop):
        value = self.randrange_values.pop(0)
        assert 0 <= value < stop, f"scripted draw {value} out of range({stop})"
        return value

    def random(self):
        return self.random_values.pop(0)


def make_table(vectors: dict[str, list[float]]) -> EmbeddingTable:
    """Embedding table fixture from explicit token -> vector pairs."""
    tokens = list(vectors)
    matrix = np.array([vectors[t] for t in tokens], dtype=np.float64)
    vocab = Vocabulary(tokens, np.ones(len(tokens), dtype=np.int64), 1, len(tokens))
    return EmbeddingTable(vocab, matrix)
