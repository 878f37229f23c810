"""Unsupervised training: penalty loss, Adam, checkpoints"""

from .adam import AdamState, adam_step
from .checkpoint import MODEL_KINDS, Checkpoint, build_model, load_checkpoint, save_checkpoint
from .loss import LossTerms, batch_loss, instance_loss
from .monitor import TrainingMonitor
from .trainer import TrainConfig, Trainer, TrainResult, ablation_config, train

__all__ = [
    "AdamState",
    "adam_step",
    "MODEL_KINDS",
    "Checkpoint",
    "build_model",
    "load_checkpoint",
    "save_checkpoint",
    "LossTerms",
    "batch_loss",
    "instance_loss",
    "TrainingMonitor",
    "TrainConfig",
    "Trainer",
    "TrainResult",
    "ablation_config",
    "train",
]
