"""Consistency testing for missed recalls in shop search engines."""

from .catalog import Catalog, Shop, parse_catalog, validate_shop
from .generation import QueryGroup, TestQuery, generate_llm, generate_template, parse_llm_output
from .metrics import RunLedger, RunMetrics, compute_metrics, emit_report
from .oracle import GroupVerdict, MissedRecallFinding, evaluate_group, evaluate_run
from .validation import filter_group, validate_llm, validate_rule

__version__ = "0.1.0"
