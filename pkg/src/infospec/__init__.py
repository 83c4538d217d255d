"""Information-spectrum hypothesis testing for finite classical and quantum pairs."""
__version__ = "0.1.0"

from .classical import (
    ClassicalTest,
    FiniteMeasure,
    LLRSpectrum,
    TestEvaluation,
    classical_np_test,
    evaluate_test,
    iid_spectrum,
    kl_divergence,
    spectrum_alpha_beta,
)
from .errors import DomainError, EigenError, InputError, PropertyFailure, SizeError
from .exponents import (
    B_e_from_rates,
    B_e_star_from_rates,
    B_e_star_star,
    ExponentQuery,
    ExponentResult,
    construct_tilted_test,
    han_formula_check,
    han_kobayashi_exponent,
    hoeffding_exponent,
    quantum_hoeffding_lower_bound,
)
from .quantum import (
    BruteForceOracle,
    quantum_np_projection,
    quantum_psi,
    quantum_relative_entropy,
)
from .rates import (
    RateFunction,
    SteinReport,
    classical_eta_rate,
    classical_zeta_c_rate,
    cramer_rates,
    finite_n_rate_samples,
    stein_report,
)
from .schur import build_decomposition, fast_iid_evaluation, g_curve, half_crossing
from .source import (
    CodingSystem,
    R_e,
    R_e_star,
    code_test_reduction,
    finite_n_rate,
    self_information_spectrum,
    sigma_rates,
)

__all__ = [
    "__version__",
    "DomainError",
    "EigenError",
    "InputError",
    "PropertyFailure",
    "SizeError",
    "build_decomposition",
    "fast_iid_evaluation",
    "g_curve",
    "half_crossing",
    "ClassicalTest",
    "FiniteMeasure",
    "LLRSpectrum",
    "TestEvaluation",
    "classical_np_test",
    "evaluate_test",
    "iid_spectrum",
    "kl_divergence",
    "spectrum_alpha_beta",
    "B_e_from_rates",
    "B_e_star_from_rates",
    "B_e_star_star",
    "ExponentQuery",
    "ExponentResult",
    "construct_tilted_test",
    "han_formula_check",
    "han_kobayashi_exponent",
    "hoeffding_exponent",
    "quantum_hoeffding_lower_bound",
    "BruteForceOracle",
    "quantum_np_projection",
    "quantum_psi",
    "quantum_relative_entropy",
    "RateFunction",
    "SteinReport",
    "classical_eta_rate",
    "classical_zeta_c_rate",
    "cramer_rates",
    "finite_n_rate_samples",
    "stein_report",
    "CodingSystem",
    "R_e",
    "R_e_star",
    "code_test_reduction",
    "finite_n_rate",
    "self_information_spectrum",
    "sigma_rates",
]
