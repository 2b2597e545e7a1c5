"""Exact and sampled experiments on coprime Diophantine approximation sets."""

from dslab.approx_sets import IntervalUnion, OverlapEngine, build_Aq, closed_form_mass, member_k
from dslab.arith import build_sieve, dilation, pair_profile
from dslab.counting import count_solutions, psi_mass
from dslab.errors import InvariantViolation
from dslab.psi import PsiTable, WeightTable, preset

__version__ = "0.1.0"
