"""Orlicz-space norms, weighted degenerate elliptic solves and level-set
iteration bookkeeping for a-priori L-infinity bounds."""

from . import degiorgi, measure, operator, orlicz, young
from .degiorgi import (DeGiorgiLedger, ExponentTriple, IterationParams, build_ledger,
                       empirical_constant, exponent_triple, induction_verify, levels,
                       tau0_threshold)
from .measure import (ScalarField, WeightedDomain, a2_constant_estimate, box, integrate,
                      interval, level_set_measure, lp_norm, radial_ball)
from .operator import (EllipticOperatorSpec, SolverError, assemble, estimate_C0,
                       exp_integral, exp_transform, solve, sobolev_quotient, weak_residual)
from .orlicz import (holder_pairing, indicator_norm, luxemburg_norm, norm_chain_check)
from .young import ConjugateForm, YoungParams, preceq_check

__version__ = "0.1.0"
