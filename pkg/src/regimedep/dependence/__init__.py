"""Sample and model-based dependence measures and the distance-covariance test."""

from .dcov import DcovError, IndependenceTest, distance_covariance_test
from .functionals import (FUNCTIONALS, FunctionalSet, QuadratureError, TailEstimate, TauEstimate,
                          bhattacharya_s_rho, copula_kendall_tau, copula_spearman_rho,
                          functional_set, hellinger_correlation, mutual_information,
                          mutual_information_delta2, student_t_tail, tail_dependence,
                          tail_dependence_numeric)
from .rank import (RankError, count_inversions, kendall_tau_bruteforce, sample_kendall_tau,
                   sample_spearman_rho)

__all__ = [
    "DcovError", "IndependenceTest", "distance_covariance_test", "FUNCTIONALS", "FunctionalSet",
    "QuadratureError", "TailEstimate", "TauEstimate", "bhattacharya_s_rho", "copula_kendall_tau",
    "copula_spearman_rho", "functional_set", "hellinger_correlation", "mutual_information",
    "mutual_information_delta2", "student_t_tail", "tail_dependence", "tail_dependence_numeric",
    "RankError", "count_inversions", "kendall_tau_bruteforce", "sample_kendall_tau",
    "sample_spearman_rho",
]
