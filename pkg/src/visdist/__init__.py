"""Visual distance between WordNet synsets from CNN activation embeddings.

Pipeline: raw activation matrices are standardized per feature, discretized
into {-1, 0, +1}, collapsed into one ternary representative per synset via
the per-feature mode, and compared pairwise with a bounded pseudo-metric
(the Jaccard distance of the +1 presence sets).  The resulting matrix can
be correlated with WordNet path / Wu-Palmer / Lin distances, clustered with
average linkage, and projected to 2-D with classical MDS or PCA.
"""

from .analysis import (
    ClassicalMDS,
    ConsistencyReport,
    CorrelationReport,
    Projection,
    TernaryPCA,
    align_matrices,
    classical_mds,
    compare_matrices,
    consistency_vs_specificity,
    pca_projection,
    pearson,
    spearman,
    write_projection_csv,
)
from .cluster import (
    AverageLinkage,
    Dendrogram,
    adjusted_rand_index,
    agglomerative_cluster,
)
from .distance import (
    DistanceMatrix,
    PairCounts,
    distance_matrix,
    pair_counts,
    read_distance_matrix,
    visual_distance,
    visual_similarity,
    write_distance_matrix,
)
from .fne import (
    ActivationStandardizer,
    StandardizationStats,
    TernaryDiscretizer,
    TernaryMatrix,
    Thresholds,
    apply_standardization,
    discretize,
    feature_type_proportions,
    read_ternary_matrix,
    standardize,
    write_ternary_matrix,
)
from .ingest import (
    LayerLayout,
    Manifest,
    group_by_synset,
    read_layer_layout,
    read_manifest,
    read_raw_matrix,
    write_raw_matrix,
)
from .lexical import (
    InformationContent,
    Taxonomy,
    depth,
    lcs,
    lexical_distance_matrix,
    lin_similarity,
    parse_information_content,
    parse_taxonomy,
    path_similarity,
    wup_similarity,
)
from .representative import (
    PresenceBitset,
    SynsetRepresentative,
    TernaryVector,
    build_all_representatives,
    compute_representative,
    presence_set,
    read_representatives,
    write_representatives,
)

__version__ = "0.1.0"
