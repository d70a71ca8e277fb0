"""Exact experiments with the 3x+1 map, its 2-adic conjugacy and Sturmian
parity words."""

from .conjugacy import (LimitEstimate, affine_of, apply_word, cycle_value, parity_vector, phi_finite,
                        phi_limit_estimate, phi_partials, phi_star_estimate, pseudo_trajectory, trajectory)
from .errors import ConjlabError, InputError, ResolutionError
from .exactnum import AlphaOracle, Interval, alpha_floor, compare_pow, reduce_mod_prime_power
from .padic import output_3adic, phi_2adic, rational_to_padic, table1_row
from .sturmian import ConstructorConfig, Shape, ZeroRunFamily, construct_word, convergents, sturmian_stream
from .words import FiniteWord, WordStream, parse_word, phi

__version__ = "0.1.0"

__all__ = [
    "AlphaOracle", "ConjlabError", "ConstructorConfig", "FiniteWord", "InputError", "Interval",
    "LimitEstimate", "ResolutionError", "Shape", "WordStream", "ZeroRunFamily", "affine_of", "alpha_floor",
    "apply_word", "compare_pow", "construct_word", "convergents", "cycle_value", "output_3adic",
    "parity_vector", "parse_word", "phi", "phi_2adic", "phi_finite", "phi_limit_estimate", "phi_partials",
    "phi_star_estimate", "pseudo_trajectory", "rational_to_padic", "reduce_mod_prime_power",
    "sturmian_stream", "table1_row", "trajectory",
]
