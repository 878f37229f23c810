"""Experiment commands: gen, train, eval, baseline, sweep, selftest"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..baselines import CcpConfig, ccp_solve, zf_init
from ..config import ConfigManager, EvalSettings
from ..errors import ConfigError, ShapeError
from ..model.base import BeamformingModel
from ..model.decoder import unroll
from ..qos import cv
from ..scenario import ChannelInstance, ScenarioConfig, generate_instances, read_dataset, write_dataset
from ..train import TrainResult, Trainer, ablation_config, load_checkpoint
from .report import EvalReport, EvalRow, write_summaries

logger = logging.getLogger(__name__)

SWEEP_AXES = ("K", "M", "gamma")
ABLATION_DIR = "ablation_r0"

Solver = Callable[[ChannelInstance], np.ndarray]


def _power(W: np.ndarray) -> float:
    return float(np.sum(np.abs(W) ** 2))


def _cv(inst: ChannelInstance, W: np.ndarray) -> float:
    return cv(inst, W).item()


def _timed(solver: Solver, inst: ChannelInstance) -> Tuple[np.ndarray, float]:
    start = time.perf_counter()
    W = solver(inst)
    return W, 1000.0 * (time.perf_counter() - start)


def run_solver(label: str, solver: Solver, instances: Sequence[ChannelInstance], report_cv: float) -> EvalReport:
    """Run a solver instance by instance on one thread, timing each call"""
    report = EvalReport(label=label, report_cv=report_cv)
    for index, inst in enumerate(instances):
        W, elapsed = _timed(solver, inst)
        report.rows.append(EvalRow(instance=index, power_w=_power(W), cv=_cv(inst, W), time_ms=elapsed))
    return report


def cmd_gen(config: ConfigManager, out, count: Optional[int] = None, seed: Optional[int] = None) -> int:
    """
    Write count instances of the configured scenario

    Instance i of the file equals sample_instance(cfg, instance_rng(seed, i)).
    """
    settings = config.eval_settings()
    count = settings.count if count is None else count
    seed = settings.seed if seed is None else seed
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    instances = generate_instances(config.scenario_config(), count, seed=seed)
    written = write_dataset(out, instances)
    print(f"Wrote {written} instances (seed {seed}) to {out}")
    return written


def cmd_train(config: ConfigManager, out, ablation_r0: bool = False) -> List[TrainResult]:
    """Train the configured model into out/ (and the r_train=0 variant into out/ablation_r0)"""
    cfg = config.train_config()
    runs = [(cfg, Path(out))]
    if ablation_r0:
        runs.append((ablation_config(cfg), Path(out) / ABLATION_DIR))

    results = []
    for run_cfg, run_dir in runs:
        logger.info(f"Training with r_train={run_cfg.decoder.r_train} into {run_dir}")
        result = Trainer(run_cfg, run_dir).run()
        print(f"Checkpoint written to {result.checkpoint}: {result.monitor.get_summary()}")
        results.append(result)
    return results


def cv_trajectory(model: BeamformingModel, inst: ChannelInstance, r_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    CV and power after r = 0 .. r_max constraint steps

    Stops stepping once the beamformer is feasible, since later steps leave it unchanged.
    """
    norm = inst.normalized()
    W0 = model.forward(norm, model.bind(), 0)
    cvs = np.empty(r_max + 1)
    powers = np.empty(r_max + 1)
    for r, W in enumerate(unroll(norm, W0, model.decoder.eta)):
        W = W.to_complex()
        cvs[r], powers[r] = _cv(norm, W), _power(W)
        if cvs[r] == 0.0:
            cvs[r:], powers[r:] = cvs[r], powers[r]
            break
        if r == r_max:
            break
    return cvs, powers


def select_r_test(cvs: np.ndarray, cv_target: float) -> Tuple[int, bool]:
    """
    Smallest r whose mean CV is below the target

    Args:
        cvs: instances × (r_max + 1) CV values

    Returns:
        (r, reached); when no r reaches the target, the r with the lowest mean CV and False
    """
    mean = cvs.mean(axis=0)
    hits = np.flatnonzero(mean < cv_target)
    if hits.size:
        return int(hits[0]), True
    return int(np.argmin(mean)), False


def evaluate_model(
    model: BeamformingModel,
    instances: Sequence[ChannelInstance],
    settings: EvalSettings,
    label: str = "model",
    r_max: Optional[int] = None,
) -> EvalReport:
    """
    Choose r_test on the instances, then time inference at that depth

    Raises:
        ShapeError: Instances have a different antenna count than the model
    """
    r_max = settings.r_max if r_max is None else r_max
    for inst in instances:
        if inst.n_antennas != model.n_antennas:
            raise ShapeError(f"model is sized for N={model.n_antennas}, dataset has N={inst.n_antennas}")

    def trajectory(inst: ChannelInstance):
        return cv_trajectory(model, inst, r_max)

    if settings.workers > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as pool:
            results = list(pool.map(trajectory, instances))
    else:
        results = [trajectory(inst) for inst in instances]
    cvs = np.stack([c for c, _ in results])
    powers = np.stack([p for _, p in results])

    r_test, reached = select_r_test(cvs, settings.cv_target)
    if reached:
        logger.info(f"{label}: r_test={r_test} reaches mean CV {cvs[:, r_test].mean():.4g}")
    else:
        logger.warning(
            f"{label}: mean CV target {settings.cv_target} not reached within r_max={r_max}; "
            f"best is {cvs[:, r_test].mean():.4g} at r={r_test}"
        )

    report = EvalReport(label=label, r_test=r_test, target_reached=reached, report_cv=settings.report_cv)
    for index, inst in enumerate(instances):
        _, elapsed = _timed(lambda i: model.infer(i, r_test), inst)
        report.rows.append(
            EvalRow(instance=index, power_w=float(powers[index, r_test]), cv=float(cvs[index, r_test]), time_ms=elapsed)
        )
    return report


def cmd_eval(config: ConfigManager, checkpoint, dataset, r_max: Optional[int] = None, out=None) -> EvalReport:
    loaded = load_checkpoint(checkpoint)
    instances = read_dataset(dataset)
    report = evaluate_model(loaded.model, instances, config.eval_settings(), label=loaded.model.kind, r_max=r_max)
    if out is not None:
        report.write_csv(out)
    print(report.summary())
    return report


def baseline_solver(which: str, ccp_cfg: Optional[CcpConfig] = None) -> Solver:
    if which == "zf":
        return lambda inst: zf_init(inst).W
    if which == "ccp":
        return lambda inst: ccp_solve(inst, zf_init(inst).W, ccp_cfg).W
    raise ConfigError(f"unknown baseline {which!r}; expected zf or ccp")


def cmd_baseline(config: ConfigManager, dataset, which: str, out=None) -> EvalReport:
    """Zero-forcing or CCP (started from zero-forcing) on every instance"""
    solver = baseline_solver(which, config.ccp_config())
    instances = read_dataset(dataset)
    report = run_solver(which, solver, instances, config.eval_settings().report_cv)
    if out is not None:
        report.write_csv(out)
    print(report.summary())
    return report


def parse_range(text: str) -> List[float]:
    """
    Axis values from "a..b", "a..b:step" or "v1,v2,..."

    Raises:
        ConfigError: Malformed text or an empty range
    """
    text = text.strip()
    try:
        if ".." in text:
            bounds, _, step_text = text.partition(":")
            lo_text, hi_text = bounds.split("..", 1)
            lo, hi = float(lo_text), float(hi_text)
            step = float(step_text) if step_text else 1.0
            if step <= 0:
                raise ConfigError(f"range step must be positive, got {step}")
            values = list(np.arange(lo, hi + step / 2, step))
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise ConfigError(f"cannot parse range {text!r}: {e}") from e
    if not values:
        raise ConfigError(f"range {text!r} is empty")
    return [float(v) for v in values]


def sweep_scenario(base: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    """
    Scenario for one sweep point

    K sets every group's user count, M the number of groups (each with the
    first group's K_m), gamma every group's target in dB.
    """
    if axis == "gamma":
        return replace(base, sinr_target_db=(float(value),))
    if value != int(value) or value < 1:
        raise ConfigError(f"sweep axis {axis} needs positive integers, got {value}")
    count = int(value)
    if axis == "K":
        return base.with_groups([count] * base.n_groups)
    if axis == "M":
        return base.with_groups([base.group_sizes[0]] * count)
    raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def cmd_sweep(
    config: ConfigManager, checkpoint, axis: str, values: str, out=None, count: Optional[int] = None
) -> List[EvalReport]:
    """Evaluate one checkpoint at every axis value on freshly drawn instances"""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    points = parse_range(values)
    settings = config.eval_settings()
    count = settings.count if count is None else count
    model = load_checkpoint(checkpoint).model
    base = replace(config.scenario_config(), n_antennas=model.n_antennas)
    scenarios = [sweep_scenario(base, axis, value) for value in points]

    reports = []
    for value, scenario in zip(points, scenarios):
        instances = generate_instances(scenario, count, seed=settings.seed)
        report = evaluate_model(model, instances, settings, label=f"{axis}={value:g}")
        print(report.summary())
        reports.append(report)
    if out is not None:
        write_summaries(out, reports, [{"axis": axis, "value": value} for value in points])
    return reports


def cmd_selftest(extra_args: Sequence[str] = ()) -> int:
    """Run the bundled property tests; returns pytest's exit code"""
    import pytest

    tests_dir = Path(__file__).resolve().parents[2] / "tests"
    return int(pytest.main([str(tests_dir), "-q", *extra_args]))
