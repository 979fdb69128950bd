"""Numerical toolkit for generalized tangent-point energies TP^(p,q)
on closed curves: evaluation, first variation, Fourier-multiplier
analysis of the variation at q=2, geometric diagnostics, and
fixed-length gradient descent."""

from .curves import (ClosedCurve, CurveError, CurveSpectrum, derivatives,
                     differentiate, differentiate_adjoint, length, load_curve,
                     make_primitive, min_strand_distance, resample_arclength,
                     save_curve, spectrum, transform)
from .energy import (EnergyParams, QuadratureSpec, SelfIntersectionError,
                     Strand, classical_equivalence, classify, cross_energy,
                     pair_energy, tp_energy)
from .variation import (chord_uniformity, discrete_gradient,
                        first_variation_arclength, first_variation_general)
from .multiplier import (F_function, MultiplierTable, Q_direct, Q_multiplier,
                         asymptotic_constant, build_multiplier_table,
                         el_multiplier, fractional_laplacian, remainder_term,
                         rho)
from .diagnostics import (BetaProfile, beta_number, beta_number_brute,
                          beta_profile, bilipschitz_constant, holder_estimate,
                          sobolev_seminorm)
from .flow import (FlowConfig, FlowStallError, FlowState, FlowTrace,
                   flow_step, lagrange_multiplier, length_gradient, run_flow,
                   stationarity_certificate)
from .reporting import run_study

__version__ = "0.1.0"
