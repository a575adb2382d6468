"""Benchmark problems, report serialization and the command-line harness."""

from .problems import PROBLEMS, ProblemSpec, get_problem
from .report import compare_runs, export_report, load_report, report_to_dict
