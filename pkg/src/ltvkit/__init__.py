"""Observability and controllability of linear time-varying systems on finite windows."""

from .catalog import CatalogEntry, load_catalog, run_entry
from .classify import GramianEnvelopeFit, Property, Verdict, classify, two_of_three
from .common import Caps, GridSpec, Status
from .envelopes import (Envelope, EnvelopeKind, PairGrid, check_envelope, falsify_uniform,
                        fit_envelope)
from .expr import TimeExpr, eval_expr, parse_expr
from .gramians import GramianKind, check_gramian_relations, gramian, min_eig
from .system import ExprMatrix, LtvSystem, TransitionEvaluator, output, propagate, transition
from .transforms import (FeedbackGain, GainRole, adjoint, dual, observer_error_system,
                         output_injection, state_feedback, verify_adjoint_dual_transitions)
from .verify import HypothesisSet, ReportStatus, Theorem, TheoremReport, recheck, run_theorem

__all__ = [
    "CatalogEntry", "load_catalog", "run_entry",
    "GramianEnvelopeFit", "Property", "Verdict", "classify", "two_of_three",
    "Caps", "GridSpec", "Status",
    "Envelope", "EnvelopeKind", "PairGrid", "check_envelope", "falsify_uniform", "fit_envelope",
    "TimeExpr", "eval_expr", "parse_expr",
    "GramianKind", "check_gramian_relations", "gramian", "min_eig",
    "ExprMatrix", "LtvSystem", "TransitionEvaluator", "output", "propagate", "transition",
    "FeedbackGain", "GainRole", "adjoint", "dual", "observer_error_system", "output_injection",
    "state_feedback", "verify_adjoint_dual_transitions",
    "HypothesisSet", "ReportStatus", "Theorem", "TheoremReport", "recheck", "run_theorem",
]
