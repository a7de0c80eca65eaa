"""Graph-convolutional Gaussian processes for link prediction."""

from .data import (
    LinkDataset,
    align_features,
    apply_split_manifest,
    dataset_stats,
    graph_fingerprint,
    index_token_pairs,
    load_features,
    load_graph,
    load_split_manifest,
    parse_edge_list,
    parse_feature_file,
    parse_pair_file,
    save_split_manifest,
    split_dataset,
)
from .errors import DataError, LinkGPError, NumericsError
from .estimator import GraphConvLinkGP
from .graph import (
    ConvolutionConfig,
    GraphDomain,
    dirichlet_norm,
    geodesic_distances,
    interpolated_convolution_product,
    normalized_convolution_matrix,
    preimage_nodes,
)
from .inducing import (
    InducingStructure,
    build_inducing_structure,
    default_inducing_sizes,
    resolve_inducing_sizes,
    sample_connected_er,
)
from .kernels import (
    KernelParams,
    convolved_cross_kernel,
    convolved_node_kernel,
    covariance_distance_profile,
    rbf_ard,
)
from .links import assemble_link_gram, canonical_pairs, pair_product_matrix
from .metrics import auc, average_precision
from .reports import covariance_profile_report, dirichlet_sweep_report
from .svgp import (
    LinkPredictionModel,
    TrainingConfig,
    TrainResult,
    VariationalState,
    bernoulli_expected_loglik,
    full_elbo,
    gradient_check,
    initialize_model,
    kl_term,
    link_scores,
    load_checkpoint,
    minibatch_elbo,
    predictive_link_distribution,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ConvolutionConfig",
    "DataError",
    "GraphConvLinkGP",
    "GraphDomain",
    "InducingStructure",
    "KernelParams",
    "LinkDataset",
    "LinkGPError",
    "LinkPredictionModel",
    "NumericsError",
    "TrainResult",
    "TrainingConfig",
    "VariationalState",
    "align_features",
    "apply_split_manifest",
    "assemble_link_gram",
    "auc",
    "average_precision",
    "bernoulli_expected_loglik",
    "build_inducing_structure",
    "canonical_pairs",
    "convolved_cross_kernel",
    "convolved_node_kernel",
    "covariance_distance_profile",
    "covariance_profile_report",
    "dataset_stats",
    "default_inducing_sizes",
    "dirichlet_norm",
    "dirichlet_sweep_report",
    "full_elbo",
    "geodesic_distances",
    "gradient_check",
    "graph_fingerprint",
    "index_token_pairs",
    "initialize_model",
    "interpolated_convolution_product",
    "kl_term",
    "link_scores",
    "load_checkpoint",
    "load_features",
    "load_graph",
    "load_split_manifest",
    "minibatch_elbo",
    "normalized_convolution_matrix",
    "pair_product_matrix",
    "parse_edge_list",
    "parse_feature_file",
    "parse_pair_file",
    "predictive_link_distribution",
    "preimage_nodes",
    "rbf_ard",
    "resolve_inducing_sizes",
    "sample_connected_er",
    "save_checkpoint",
    "save_split_manifest",
    "split_dataset",
    "train",
]
