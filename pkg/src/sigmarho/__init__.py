"""Exact solvers for [sigma,rho]-domination problems on bounded-treewidth graphs."""

from .dpengine import (SideSet, SigmaRhoSpec, SolveReport, Variant,
                       build_label_set, presets, solve)
from .graphio import (Graph, NiceTreeDecomposition, TreeDecomposition, make_nice,
                      min_fill_heuristic, parse_graph, parse_td, validate_td)
from .modring import PrimeField, ResidueValue, choose_prime, crt_reconstruct, find_root
from .oracle import brute_force_solve

__version__ = "0.1.0"

__all__ = [
    "Graph", "NiceTreeDecomposition", "PrimeField", "ResidueValue", "SideSet",
    "SigmaRhoSpec", "SolveReport", "TreeDecomposition", "Variant",
    "brute_force_solve", "build_label_set", "choose_prime", "crt_reconstruct",
    "find_root", "make_nice", "min_fill_heuristic", "parse_graph", "parse_td",
    "presets", "solve", "validate_td",
]
