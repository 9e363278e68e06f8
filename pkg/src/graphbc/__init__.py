"""Recovery of the vertex centrality of a weighted graph from random-walk
first-passage times observed on a subset of vertices."""

from .control import ReconstructionResult, reconstruct_mu
from .experiments import ExperimentConfig, run_experiment, shipped_graph, verify_graph
from .fpt import FptTensor, McConfig, exact_fpt, frne, mc_fpt, read_fpt_csv, write_fpt_csv
from .graph import Graph, GraphError, check_assumptions, load_graph, solve_dirichlet, transition_kernel
from .heat import assemble_Uf, direct_heat_solve, occupation_renewal
from .numerics import NumericError, min_norm_lstsq

__all__ = [
    "ExperimentConfig",
    "FptTensor",
    "Graph",
    "GraphError",
    "McConfig",
    "NumericError",
    "ReconstructionResult",
    "assemble_Uf",
    "check_assumptions",
    "direct_heat_solve",
    "exact_fpt",
    "frne",
    "load_graph",
    "mc_fpt",
    "min_norm_lstsq",
    "occupation_renewal",
    "read_fpt_csv",
    "reconstruct_mu",
    "run_experiment",
    "shipped_graph",
    "solve_dirichlet",
    "transition_kernel",
    "verify_graph",
    "write_fpt_csv",
]
__version__ = "0.1.0"
