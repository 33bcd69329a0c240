"""Distances between finite metric spaces and finite-dimensional normed spaces, with reductions between them."""
from .corespace import (
    TAU, Bijection, ClassBounds, Correspondence, FiniteMetricSpace, Witness, distortion, greedy_net,
    graph_metric_capped, hausdorff_distance, validate_metric,
)
from .distances import (
    coarse_lipschitz_fit, gh_bijective, gh_exact, hl_closeness, lipschitz_exact, phi1, phi2,
)
from .normed import KadetsCertificate, NormSpec, bm_upper, glue_norm_eval, norm_eval

__version__ = "0.1.0"
