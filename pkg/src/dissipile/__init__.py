"""dissipile: dissipative Abelian sandpiles, their spanning-tree coding,
and Monte Carlo couplings measuring convergence to the critical model as
the dissipation vanishes."""

__version__ = "0.1.0"

from .lattice import (BoxDomain, DissipativeGraph, BoundaryOrder, ROOT,
                      alpha_bijection, alpha_inverse, alpha_value,
                      boundary_enumeration, build_box, build_grid,
                      build_wired_graph, direction_index, direction_vectors,
                      domain_from_vertices)
from .sandpile import (TopplingParams, chain_step, config_from_json,
                       config_to_json, fsc_scan, is_stable, run_chain,
                       stabilize, topple, toppling_matrix)
from .burning import BurnSchedule, burning_test, is_allowed
from .treecode import (SpanningTree, attach_uniform_heights, discretize,
                       local_height_from_paths, phi, sigma,
                       star_height_count, tree_from_json, tree_to_json)
from .oracle import (ExactEnumeration, count_trees_determinant,
                     enumerate_allowed, enumerate_trees, exact_stationary,
                     run_oracle_suite)
from .walks import (CutTimeScan, KillingLaw, WalkTrace, cut_time_scan,
                    cut_time_probability, le_prefix_stability, loop_erase,
                    run_walk)
from .wilson import (ArrowStacks, TwoPathResult, coupled_wilson_pair,
                     two_path_flags, two_path_quadruple, wilson_sample,
                     wilson_sample_audit)
from .coupling import (CouplingReport, GapEstimate, RateFit, RateResult,
                       ReplicaBatch, Schedule, beurling_trend, ci_monotone,
                       cut_time_trend, d2_parameter_schedule,
                       estimate_event_gap, fit_rate, make_origin_event,
                       rate_experiment, run_coupling_replica_d2,
                       run_coupling_replica_d3, run_coupling_replicas,
                       sample_heights, tv_distance)
