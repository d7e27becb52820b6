"""Counterfactual data augmentation for relation classification.

Generates label-flipping, entity-preserving edits of annotated samples by
intervening on syntactic neighborhoods (SynCo) and semantic dependency
paths (SemCo), verifies every edit with a classifier, and measures the
robustness gain on a seeded spurious-correlation benchmark.
"""

from .corpus import (
    AnnotatedSample,
    Corpus,
    CorpusError,
    Counterfactual,
    DepEdge,
    EntityMention,
    Token,
    coarse_pos,
    emit_corpus,
    load_corpus,
)
from .depgraph import (
    CentralityProfile,
    DepGraph,
    SdpResult,
    aggregate_centrality,
    betweenness_centrality,
    build_graph,
    closeness_centrality,
    degree_centrality,
    entity_centrality,
    first_order_neighbors,
    shortest_dependency_path,
    topological_distance,
)
from .embed import TagEmbeddings, WordVectors, cosine, load_vectors, path_embedding, syntactic_feature
from .classify import (
    LinearRcModel,
    LocalPredictor,
    HttpPredictor,
    ReferenceStub,
    TrainConfig,
    external_predict,
    featurize,
    predict,
    train,
)
from .synco import SynCoConfig, generate_synco, pair_entities, sample_candidates, substitute_neighbors
from .semco import SemCoConfig, generate_semco, path_similarity, splice_path
from .evalkit import (
    MetricReport,
    SplitPlan,
    SpuriousConfig,
    ablation_run,
    ood_split,
    score,
    spurious_benchmark,
)

__version__ = "0.1.0"
