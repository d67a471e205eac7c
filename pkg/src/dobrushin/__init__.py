"""Certifier and exact small-graph verifier for the Dobrushin-Pechersky uniqueness criterion."""

from .coupling import CouplingTable, apply_R, functionals, iterate, localized_sweep, optimal_coupling, sweep
from .criterion import (ContractionParams, UniquenessCertificate, Verdict, certify, contraction_matrix,
                        decay_constants, k_star, norms, spectral_radius)
from .decay import decay_experiment
from .gibbs import (ExactMeasure, Observable, check_consistency, conditional_measure, covariance,
                    exact_gibbs, h_moment)
from .graph import (ColorPartition, Graph, build_graph, external_boundary, greedy_color, max_degree,
                    path_distance, shells)
from .spin_model import (FiniteSpinModel, conditional, estimate_kappa_entry, tv_distance,
                         verify_membership)

__version__ = "0.1.0"
