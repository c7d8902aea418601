"""Numerical laboratory for spectral triples on quantum tori and noncommutative solenoids."""

__version__ = "0.1.0"

from .clifford import GammaSet, build_gammas, verify_clifford
from .dirac import (commutator_matrix, dirac_matrix, dirac_spectrum, lip, lip_equality_check,
                    lip_exact_generator, lip_upper_bound)
from .errors import ConfigError, LevelError, ResourceError, SolverError
from .geometry import (FejerSpec, SolverOptions, StateSpec, bridge_builder_epsilon, connes_distance,
                       fejer_lip_contraction_check, fejer_smooth, spectral_compare)
from .padic import (BallTable, GroupElement, PadicRational, ball, coset_representatives,
                    doubling_ratio, f_weight, fdiff_sup, length, level, parse_element, reduce)
from .twisted import (CocycleSpec, FourierPolynomial, TruncationSpec, adjoint, lambda_matrix,
                      sigma, trace, twisted_convolve)
