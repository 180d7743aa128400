"""Existential parameter-free definitions of henselian valuation rings:
formula synthesis and verification on truncated F_q((t)) and Q_p."""

from .evaluate import (Definition, SamplePlan, VerifyReport, bounded_refute, construct_witness,
                       eval_uniform, soundness_certificate, verify_definition)
from .ffield import (FieldDesc, FqElem, FqPoly, find_nonroot_poly, find_trace_poly, legendre,
                     make_field, poly_is_irreducible, product_cover_check)
from .formula import (eta_f, eta_k, finite_formula, parse, phi_f, phi_n, psi_f, psi_k, to_sexpr,
                      uniform_formula, uniformk_formula)
from .localfield import LocalElem, hensel_solve, laurent, padic

__version__ = "0.1.0"

__all__ = [
    "Definition", "SamplePlan", "VerifyReport", "bounded_refute", "construct_witness",
    "eval_uniform", "soundness_certificate", "verify_definition",
    "FieldDesc", "FqElem", "FqPoly", "find_nonroot_poly", "find_trace_poly", "legendre",
    "make_field", "poly_is_irreducible", "product_cover_check",
    "eta_f", "eta_k", "finite_formula", "parse", "phi_f", "phi_n", "psi_f", "psi_k", "to_sexpr",
    "uniform_formula", "uniformk_formula",
    "LocalElem", "hensel_solve", "laurent", "padic",
]
