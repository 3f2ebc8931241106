"""Concept embeddings from semantic-network random walks.

Pipeline: parse sentence networks (MNSN v1), generate random-walk corpora,
train skip-gram embeddings on them, disambiguate words to concepts via
word-concept vectors, estimate text similarity, and assign short answers
to target-group profiles.
"""

__version__ = "0.1.0"

from .sn import (  # noqa: F401
    ConceptId,
    SemanticNetwork,
    SnFormatError,
    parse_concept_id,
    parse_sn_document,
    serialize_sn_document,
)
from .walks import (  # noqa: F401
    InnerNodePolicy,
    WalkConfig,
    WalkSequence,
    elide_inner_nodes,
    generate_corpus,
    random_walk,
)
from .sgns import (  # noqa: F401
    EmbeddingTable,
    TrainConfig,
    Vocabulary,
    build_vocabulary,
    cosine,
    load_table,
    save_table,
    train,
)
from .lexicon import Lexicon, load_lexicon, load_lemma_map  # noqa: F401
from .wsd import (  # noqa: F401
    WordConceptTable,
    build_word_concept_table,
    disambiguate,
    sentence_centroid,
)
from .similarity import (  # noqa: F401
    CombinationWeights,
    SimilarityEstimate,
    beam_permutation_score,
    sim_combined,
    sim_concatenated,
    sim_concepts,
    sim_jaccard,
    sim_words,
)
from .segment import (  # noqa: F401
    AssignmentRun,
    ContestAnswer,
    MilieuProfile,
    ProfileSet,
    accuracy,
    agreement_report,
    assign,
    cohens_kappa,
    load_answers,
    load_gold,
    load_profiles,
    majority_vote,
)
