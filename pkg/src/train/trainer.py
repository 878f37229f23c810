"""Unsupervised penalty training with fresh batches, Adam and per-epoch learning-rate decay"""

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..autodiff.tape import Tape, backward
from ..errors import BeamEngineerError, ConfigError, TrainingDivergedError
from ..model.base import BeamformingModel
from ..model.decoder import DecoderConfig
from ..model.params import EncoderHyper, ModelParams
from ..scenario import ChannelInstance, ScenarioConfig, generate_instances
from .adam import AdamState, adam_step
from .checkpoint import build_model, save_checkpoint
from .loss import instance_loss
from .monitor import TrainingMonitor

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "epoch", "lr", "loss", "mean_power_w", "mean_V"]
LOG_NAME = "train_log.csv"
LAST_GOOD_NAME = "last_good"


@dataclass(frozen=True)
class TrainConfig:
    """Training loop, model and scenario settings"""

    epochs: int = 10
    steps_per_epoch: int = 200
    batch_size: int = 128
    lr: float = 1e-3
    decay: float = 0.98
    rho: float = 0.5
    seed: int = 0
    workers: int = 1
    model_kind: str = "hpe"
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    encoder: EncoderHyper = field(default_factory=EncoderHyper)
    decoder: DecoderConfig = field(default_factory=DecoderConfig)

    def __post_init__(self):
        for name in ("epochs", "steps_per_epoch", "batch_size", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"train.{name} must be >= 1, got {getattr(self, name)}")
        if not self.lr > 0 or not self.rho > 0:
            raise ConfigError(f"train.lr and train.rho must be positive, got {self.lr} and {self.rho}")
        if not 0 < self.decay <= 1:
            raise ConfigError(f"train.decay must lie in (0, 1], got {self.decay}")
        if self.seed < 0:
            raise ConfigError(f"train.seed must be non-negative, got {self.seed}")

    @classmethod
    def full(cls, **overrides) -> "TrainConfig":
        """Full budget: 100 epochs of 2000 steps with 1024 samples, τ=1e-4, β=0.98"""
        base = dict(epochs=100, steps_per_epoch=2000, batch_size=1024, lr=1e-4, decay=0.98)
        return cls(**{**base, **overrides})

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """Reduced budget: 10 epochs of 200 steps with 128 samples"""
        base = dict(epochs=10, steps_per_epoch=200, batch_size=128, lr=1e-3, decay=0.98)
        return cls(**{**base, **overrides})

    def lr_at(self, epoch: int) -> float:
        """Learning rate during epoch e (0-based): τ·β^e"""
        return self.lr * self.decay**epoch

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class TrainResult:
    model: BeamformingModel
    checkpoint: Optional[Path]
    log_rows: List[Dict[str, float]]
    monitor: TrainingMonitor


def instance_gradient(
    model: BeamformingModel, params: ModelParams, inst: ChannelInstance, rho: float, weight: float
) -> Tuple[Dict[str, np.ndarray], float, float, float]:
    """Gradient of one weighted instance loss on its own tape"""
    tape = Tape()
    bound = params.bind(tape)
    terms = instance_loss(model, inst, bound, rho, weight=weight)
    grads = backward(tape, terms.loss)
    return {name: grads[t] for name, t in bound.items()}, terms.loss.item(), terms.power, terms.violation


class Trainer:
    """Runs the training loop and writes the checkpoint and loss log"""

    def __init__(self, cfg: TrainConfig, out_dir=None, model: Optional[BeamformingModel] = None):
        """
        Initialize trainer

        Args:
            cfg: Training configuration
            out_dir: Where to write the checkpoint and log (None writes nothing)
            model: Starting model (fresh seeded model if None)
        """
        self.cfg = cfg
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.model = model or build_model(
            cfg.model_kind, cfg.encoder, cfg.scenario.n_antennas, cfg.decoder, cfg.seed
        )
        self.state = AdamState.zeros_like(self.model.params)
        self.monitor = TrainingMonitor()
        self.log_rows: List[Dict[str, float]] = []

    def batch(self, step: int) -> List[ChannelInstance]:
        """Fresh batch for a global step; instance i is keyed by step·N_b + i"""
        start = step * self.cfg.batch_size
        return generate_instances(self.cfg.scenario, self.cfg.batch_size, seed=self.cfg.seed, start=start)

    def batch_gradient(
        self, params: ModelParams, batch: Sequence[ChannelInstance]
    ) -> Tuple[Dict[str, np.ndarray], float, float, float]:
        """Mean loss gradient, reduced in instance order"""
        weight = 1.0 / len(batch)

        def run(inst: ChannelInstance):
            return instance_gradient(self.model, params, inst, self.cfg.rho, weight)

        if self.cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                results = list(pool.map(run, batch))
        else:
            results = [run(inst) for inst in batch]

        total = {name: np.zeros_like(value) for name, value in params.arrays.items()}
        loss = power = violation = 0.0
        for grads, inst_loss, inst_power, inst_violation in results:
            for name in total:
                total[name] += grads[name]
            loss += inst_loss
            power += inst_power * weight
            violation += inst_violation * weight
        return total, loss, power, violation

    def _diverged(self, message: str, cause: Optional[BaseException] = None) -> None:
        last_good = None
        if self.out_dir is not None:
            last_good = str(save_checkpoint(self.model, self.out_dir / LAST_GOOD_NAME, {"diverged": message}))
        saved = f"; last good parameters in {last_good}" if last_good else ""
        logger.error(f"Training diverged: {message}{saved}")
        raise TrainingDivergedError(message, last_good) from cause

    def run(self) -> TrainResult:
        """
        Train for cfg.epochs × cfg.steps_per_epoch steps

        Returns:
            Final model, checkpoint directory and per-step log

        Raises:
            TrainingDivergedError: Loss became non-finite; the last good
                parameters are saved under out_dir/last_good
        """
        cfg = self.cfg
        log_file = writer = None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            log_file = open(self.out_dir / LOG_NAME, "w", newline="", encoding="utf-8")
            writer = csv.DictWriter(log_file, fieldnames=LOG_COLUMNS)
            writer.writeheader()

        logger.info(
            f"Training {cfg.model_kind} model ({self.model.parameter_count()} parameters): "
            f"{cfg.epochs} epochs × {cfg.steps_per_epoch} steps × batch {cfg.batch_size}"
        )
        start_time = time.time()
        try:
            step = 0
            for epoch in range(cfg.epochs):
                lr = cfg.lr_at(epoch)
                for _ in range(cfg.steps_per_epoch):
                    try:
                        grads, loss, power, violation = self.batch_gradient(self.model.params, self.batch(step))
                    except BeamEngineerError as e:
                        self._diverged(f"step {step}: {e}", e)
                    if not all(np.all(np.isfinite(g)) for g in grads.values()):
                        self._diverged(f"step {step}: non-finite gradient")

                    params, self.state = adam_step(self.model.params, grads, self.state, lr)
                    self.model = self.model.with_params(params)
                    step += 1

                    row = {"step": step, "epoch": epoch, "lr": lr, "loss": loss, "mean_power_w": power, "mean_V": violation}
                    self.log_rows.append(row)
                    self.monitor.update(loss)
                    logger.debug(f"step {step}: loss {loss:.4e}, power {power:.3e}, V {violation:.3e}")
                    if writer is not None:
                        writer.writerow(row)
                logger.info(f"Epoch {epoch + 1}/{cfg.epochs} done (lr {lr:.3e}): {self.monitor.get_summary()}")
        finally:
            if log_file is not None:
                log_file.close()

        logger.info(f"Training finished in {time.time() - start_time:.1f}s")
        checkpoint = None
        if self.out_dir is not None:
            metadata = {
                "seed": cfg.seed,
                "rho": cfg.rho,
                "steps": len(self.log_rows),
                "final_lr": cfg.lr_at(cfg.epochs - 1),
                "scenario": {
                    "group_sizes": list(cfg.scenario.group_sizes),
                    "sinr_target_db": list(cfg.scenario.sinr_target_db),
                },
            }
            checkpoint = save_checkpoint(self.model, self.out_dir, metadata)
        return TrainResult(model=self.model, checkpoint=checkpoint, log_rows=self.log_rows, monitor=self.monitor)


def train(cfg: TrainConfig, out_dir=None) -> TrainResult:
    return Trainer(cfg, out_dir).run()


def ablation_config(cfg: TrainConfig) -> TrainConfig:
    """Same run with the postprocessing-only decoder (no unrolled steps while training)"""
    return replace(cfg, decoder=replace(cfg.decoder, r_train=0))
