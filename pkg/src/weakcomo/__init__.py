"""Weak comonotonicity on finite spaces and on the line, with risk applications.

Submodules
----------
prob_core
    Finite probability spaces, random variables, events, line and joint measures.
risk_measures
    VaR, ES and the left quantile.
weak_comon
    The weak comonotonicity integral, measure families, association checks.
aggregation
    Worst-case VaR and ES of a sum of two risks with fixed marginals.
risk_sharing
    Quantile risk sharing under the ``↑_beta`` constraint.
"""

from .errors import *  # noqa: F401,F403
from .prob_core import (
    IDENTITY,
    Event,
    FiniteProbSpace,
    FunctionHandle,
    JointMeasure,
    LineMeasure,
    ProductMeasure,
    RandomVariable,
    conditional_measure,
    constant,
    equal_weight_space,
    independent_product,
    joint_distribution,
    joint_from_matrix,
    make_space,
    product_joint,
    weighted_measure,
)
from .risk_measures import es, grid_aligned, left_q, var
from .weak_comon import (
    FamilyVerdict,
    MeasureFamily,
    WcVerdict,
    cond_corr,
    cond_corr_estimate,
    cpi,
    cpi_rv,
    cross_covariances,
    explicit_family,
    family_point_masses,
    family_set_masses,
    family_tail_P,
    family_tail_Q,
    gaussian_cond_corr,
    h_star,
    independence_test_S4,
    lemma_var_check,
    prd_check,
    product_dominance_gap,
    strong_check,
    tail_event,
    wc_family,
    wc_fun,
    wc_fun_family,
    wc_joint,
    wc_rv,
    wc_rv_grid,
)
from .aggregation import (
    Coupling,
    brute_force_worst_var,
    build_worst_coupling,
    comonotone_coupling,
    es_maximizer_check,
    maximizing_couplings,
    worst_es_two,
    worst_var_two,
)
from .risk_sharing import (
    Allocation,
    SharingProblem,
    gamma_of,
    lemma_rs1_predicates,
    randomized_admissible_search,
    rs1_part,
    solve,
    up_beta_check,
    v_beta,
)

__version__ = "0.1.0"
