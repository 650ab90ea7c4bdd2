"""Cyclic proof toolkit.

Checks global trace conditions of cyclic preproofs over activation
algebras, generates and checks the induced reset proof systems, and
translates proofs in both directions (strip / annotate + expand).  Ships
instances for a cyclic typing calculus with numeral recursion and for the
modal fixpoint calculus, plus a JSON bundle format and a CLI.
"""

from .algebra import BOOLEANS, FAILURE, ActivationAlgebra, join, leq, validate
from .boards import SafraBoard, covered_chips, greedy_step, is_k_sparse, reset, thin
from .gtc import TraceInterpretation, check_gtc, check_gtc_oracle
from .proofs import CyclicTree, DerivationSystem, Preproof, Rule, unfold_at
from .reset import AnnotatedSequent, ResetPreproof, ResetStep, check_reset_condition, strip
from .search import SearchProof, annotate, expand
from .trace import TraceMorphism, TraceObject, compose, identity, morphism

__all__ = [
    "ActivationAlgebra",
    "AnnotatedSequent",
    "BOOLEANS",
    "CyclicTree",
    "DerivationSystem",
    "FAILURE",
    "Preproof",
    "ResetPreproof",
    "ResetStep",
    "Rule",
    "SafraBoard",
    "SearchProof",
    "TraceInterpretation",
    "TraceMorphism",
    "TraceObject",
    "annotate",
    "check_gtc",
    "check_gtc_oracle",
    "check_reset_condition",
    "compose",
    "covered_chips",
    "expand",
    "greedy_step",
    "identity",
    "is_k_sparse",
    "join",
    "leq",
    "morphism",
    "reset",
    "strip",
    "thin",
    "unfold_at",
    "validate",
]
