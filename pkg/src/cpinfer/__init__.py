"""Core-periphery detection and hypothesis testing for undirected networks."""

from .detect import BayesSBMResult, DetectConfig, DetectResult, bayes_sbm, detect, greedy_once
from .graph import Graph, LabelAssignment, ParseError, from_edge_list, misclassification, read_edge_list
from .hyptest import TestReport, run_test, test_labels
from .metric import DegenerateError, SwapState, t_sample
from .models import ConditionError, ModelError, ModelSpec, kappa, max_pop_rho, pop_rho, sample

__version__ = "0.1.0"

__all__ = [
    "BayesSBMResult", "ConditionError", "DegenerateError", "DetectConfig", "DetectResult",
    "Graph", "LabelAssignment", "ModelError", "ModelSpec", "ParseError", "SwapState",
    "TestReport", "bayes_sbm", "detect", "from_edge_list", "greedy_once", "kappa",
    "max_pop_rho", "misclassification", "pop_rho", "read_edge_list", "run_test",
    "sample", "t_sample", "test_labels",
]
