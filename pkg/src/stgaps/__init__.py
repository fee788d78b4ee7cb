"""Sato-Tate minorants, explicit bounded gaps and empirical trace statistics."""

from .chebcore import (
    ChebExpansion,
    Interval,
    RationalPolynomial,
    chebU_poly,
    eval_chebU,
    from_cheb_basis,
    st_integral,
    st_measure,
    st_moment,
    to_cheb_basis,
)
from .gapbound import (
    AdmissibleTuple,
    GapBoundReport,
    dusart_log_pn,
    first_k_primes_above,
    gap_bound_report,
    is_admissible,
    prime_count_upper,
    required_Mk,
    solve_log_k,
    theta_tilde,
)
from .minorant import (
    CandidateForm,
    CertifyFailure,
    FormKind,
    GridConfig,
    MinorantCertificate,
    NotFound,
    build_candidate,
    certify_minorant,
    grid_search,
    proportion_experiment,
    threshold_experiment,
)
from .sieve import Ik, Jkm, SieveConfig, SimplexPolynomial, maynard_lambda, mk_ratio, simplex_monomial_integral

__version__ = "0.1.0"
