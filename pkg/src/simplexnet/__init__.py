"""Hodge-Laplacian filtering, simplicial projection and attention pooling on
clique complexes, as a forward-only computation engine."""

from .complex import Graph, SimplicialComplex, boundary_operator, build_complex, hop_neighborhood
from .sparse import SparseMatrix, abs_entries, spgemm, spmm, transpose
from .spectral import (
    EigenSystem,
    FilterBank,
    HLOperator,
    eigensystem,
    filter_exact,
    filter_poly,
    hodge_laplacian,
    laguerre_eval,
)
from .projection import MSIWeights, ProjectionOperator, msi_forward, project_chain, project_down, project_up
from .pooling import (
    AttentionParams,
    CoarseningResult,
    NodeClustering,
    attention_weights,
    cluster_nodes,
    downsample,
    pool_signals,
)

__version__ = "0.1.0"
