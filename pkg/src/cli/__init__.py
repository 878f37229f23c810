"""Command-line experiment harness"""

from .commands import (
    cmd_baseline,
    cmd_eval,
    cmd_gen,
    cmd_selftest,
    cmd_sweep,
    cmd_train,
    cv_trajectory,
    evaluate_model,
    parse_range,
    run_solver,
    select_r_test,
    sweep_scenario,
)
from .report import EvalReport, EvalRow, write_rows, write_summaries

__all__ = [
    "cmd_baseline",
    "cmd_eval",
    "cmd_gen",
    "cmd_selftest",
    "cmd_sweep",
    "cmd_train",
    "cv_trajectory",
    "evaluate_model",
    "parse_range",
    "run_solver",
    "select_r_test",
    "sweep_scenario",
    "EvalReport",
    "EvalRow",
    "write_rows",
    "write_summaries",
]
