"""Random shortest path metrics: generation, structure checks, heuristics and
exact baselines."""
from .analytics import (
    EmpiricalCdf, ball_tail_lower, ball_tail_upper, cdf_sum_exp_ci, compare_samples,
    compare_to_bounds, compare_to_cdf, dkw_band, expected_tau, harmonic,
    janson_diameter_bound, kmedian_cost_density, s_delta, sample_tau_direct,
    sm_tail_bound, tau_cdf_bounds,
)
from .clustering import (
    ClusteringResult, build_clusters, check_clustering, classify_centers,
    cluster_count_curve,
)
from .errors import CapabilityError, ConfigError, InvalidParameterError
from .heuristics import (
    InsertionRule, MatchingResult, Pivot, TourResult, greedy_matching,
    insertion_tour, nearest_neighbor_tour, random_tour, two_opt,
)
from .kmedian import (
    KMedianResult, Variant, expected_trivial, optimal_kmedian, sample_cost_direct,
    trivial_kmedian,
)
from .metric import (
    BallProfile, Distribution, RandomMetric, WeightedGraph, all_pairs_shortest_paths,
    ball_profile, diameter, distances_from, generate_weights, random_metric, tour_length,
)
from .oracles import (
    Method, OracleResult, exact_kmedian, exact_min_matching, full_relaxation_apsp,
    held_karp_tsp, sorted_weight_prefix,
)
from .seeding import derive_seed, stream
