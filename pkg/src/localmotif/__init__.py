"""Local motif detection in directed networks under blockmodel nulls."""

from .bounds import g, global_pvalue, invert_g, local_bound
from .census import enumerate_subgraphs, theme_orders
from .detector import detect, rank_report
from .edgelist import parse_edge_list
from .errors import ContractError, DomainError, EstimationError, MotifError, SizeError
from .graph import DeletionClass, DirectedGraph, Pattern
from .nullmodel import BlockModel, er_model, estimate_pi, expected_count, expected_degree_model, lambda_u

__version__ = "0.1.0"

__all__ = [
    "BlockModel", "ContractError", "DeletionClass", "DirectedGraph", "DomainError",
    "EstimationError", "MotifError", "Pattern", "SizeError", "detect", "enumerate_subgraphs",
    "er_model", "estimate_pi", "expected_count", "expected_degree_model", "g", "global_pvalue",
    "invert_g", "lambda_u", "local_bound", "parse_edge_list", "rank_report", "theme_orders",
]
