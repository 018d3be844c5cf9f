"""Training loops and fragment-level prediction.

Two regimes are supported. Normal-only training fits the autoencoder on
reconstruction alone and calibrates an anomaly threshold as ``beta`` times
the mean training loss; prediction then flags any fragment whose
reconstruction loss reaches the threshold. Labeled training adds a
classifier head on the global code and minimizes
``alpha * reconstruction + (1 - alpha) * cross_entropy``; prediction uses
the head's probability against 0.5.

Gradient steps always teacher-force the decoder. Scores, and the frozen
pass that feeds the threshold, run the decoder autoregressively so the
threshold is calibrated in the same regime it is later compared against.
Fragments are z-scored per channel with statistics fitted on the training
set only; the statistics travel with the detector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import no_grad
from .data import Fragment
from .errors import ConfigError, DataError
from .metrics import MetricsReport, compute_metrics
from .model import ModelConfig, WaveletAutoencoder, reconstruction_loss
from .nn import bce_loss
from .optim import Adam
from .wavelet import get_family, mdwd

SEMI_EPOCHS = 16
SUPERVISED_EPOCHS = 11
STD_FLOOR = 1e-8


@dataclass
class TrainConfig:
    model: ModelConfig
    mode: str = "semi"
    epochs: int | None = None  # defaults to 16 (semi) or 11 (supervised)
    lr: float = 0.001
    alpha: float = 0.5
    beta: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("semi", "supervised"):
            raise ConfigError(f"mode must be 'semi' or 'supervised', got {self.mode!r}")
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 1.0 <= self.beta <= 2.0:
            raise ConfigError(f"beta must lie in [1, 2], got {self.beta}")

    @property
    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return self.epochs
        return SEMI_EPOCHS if self.mode == "semi" else SUPERVISED_EPOCHS


@dataclass
class Detector:
    """A trained model plus everything prediction needs."""

    model: WaveletAutoencoder
    mode: str
    threshold: float | None
    train_loss_mean: float
    norm_mean: np.ndarray
    norm_std: np.ndarray

    def __post_init__(self):
        if self.mode == "semi" and self.threshold is None:
            raise ConfigError("a reconstruction-threshold detector needs a threshold")


def compute_threshold(losses, beta: float) -> float:
    """``beta`` times the arithmetic mean of the losses (correctly rounded)."""
    losses = list(losses)
    if not losses:
        raise DataError("cannot derive a threshold from an empty loss list")
    if not 1.0 <= beta <= 2.0:
        raise ConfigError(f"beta must lie in [1, 2], got {beta}")
    return beta * (math.fsum(losses) / len(losses))


def fit_channel_stats(fragments):
    stacked = np.concatenate([f.values for f in fragments], axis=1)
    mean = stacked.mean(axis=1)
    std = stacked.std(axis=1)
    return mean, np.maximum(std, STD_FLOOR)


def normalize_values(values, mean, std):
    return (values - mean[:, None]) / std[:, None]


def _fragment_values(fragment) -> np.ndarray:
    return np.asarray(getattr(fragment, "values", fragment), dtype=np.float64)


def _check_fragments(fragments, model_cfg: ModelConfig):
    if not fragments:
        raise DataError("no training fragments")
    for i, fragment in enumerate(fragments):
        values = _fragment_values(fragment)
        if values.shape != (model_cfg.channels, model_cfg.fragment_length):
            raise DataError(
                f"fragment {i} has shape {values.shape}, expected "
                f"({model_cfg.channels}, {model_cfg.fragment_length})"
            )


def _prepared(fragments, model_cfg, mean, std):
    """Normalized values, decomposition and loss targets per fragment."""
    family = get_family(model_cfg.wavelet)
    prepared = []
    for fragment in fragments:
        xn = normalize_values(_fragment_values(fragment), mean, std)
        decomp = mdwd(xn, family, model_cfg.levels) if model_cfg.levels else None
        targets = [xn] + (list(decomp.details) if decomp else [])
        prepared.append((xn, decomp, targets))
    return prepared


def _autoregressive_loss(model, xn, decomp, targets) -> float:
    with no_grad():
        code, _ = model.encode(xn, decomp)
        recons = model.decode(code)
        return reconstruction_loss(targets, recons).item()


def train_semi_supervised(fragments, cfg: TrainConfig, progress=None) -> Detector:
    """Fit on normal-only fragments and calibrate the anomaly threshold."""
    _check_fragments(fragments, cfg.model)
    for i, fragment in enumerate(fragments):
        if getattr(fragment, "label", 0) != 0:
            raise DataError(f"fragment {i} is labeled anomalous; normal-only training requires clean data")

    mean, std = fit_channel_stats(fragments)
    prepared = _prepared(fragments, cfg.model, mean, std)
    model = WaveletAutoencoder(cfg.model)
    optimizer = Adam(model.parameters(), lr=cfg.lr)
    order_rng = np.random.default_rng(cfg.seed)

    for epoch in range(cfg.resolved_epochs):
        total = 0.0
        for idx in order_rng.permutation(len(prepared)):
            xn, decomp, targets = prepared[idx]
            code, acts = model.encode(xn, decomp)
            loss = reconstruction_loss(targets, model.decode(code, acts))
            loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total += loss.item()
        if progress is not None:
            progress(epoch, total / len(prepared))

    final_losses = [_autoregressive_loss(model, *entry) for entry in prepared]
    return Detector(
        model=model,
        mode="semi",
        threshold=compute_threshold(final_losses, cfg.beta),
        train_loss_mean=math.fsum(final_losses) / len(final_losses),
        norm_mean=mean,
        norm_std=std,
    )


def train_supervised(fragments, cfg: TrainConfig, progress=None) -> Detector:
    """Fit reconstruction and classification jointly on labeled fragments."""
    _check_fragments(fragments, cfg.model)
    labels = []
    for i, fragment in enumerate(fragments):
        label = getattr(fragment, "label", None)
        if label not in (0, 1):
            raise DataError(f"fragment {i} is missing a 0/1 label")
        labels.append(label)
    if not cfg.model.classifier:
        raise ConfigError("supervised training requires a model config with classifier=True")

    mean, std = fit_channel_stats(fragments)
    prepared = _prepared(fragments, cfg.model, mean, std)
    model = WaveletAutoencoder(cfg.model)
    optimizer = Adam(model.parameters(), lr=cfg.lr)
    order_rng = np.random.default_rng(cfg.seed)

    for epoch in range(cfg.resolved_epochs):
        total = 0.0
        for idx in order_rng.permutation(len(prepared)):
            xn, decomp, targets = prepared[idx]
            code, acts = model.encode(xn, decomp)
            loss_re = reconstruction_loss(targets, model.decode(code, acts))
            loss_c = bce_loss(model.classify(code), labels[idx])
            loss = loss_re * cfg.alpha + loss_c * (1.0 - cfg.alpha)
            loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total += loss.item()
        if progress is not None:
            progress(epoch, total / len(prepared))

    final_losses = [_autoregressive_loss(model, *entry) for entry in prepared]
    return Detector(
        model=model,
        mode="supervised",
        threshold=None,
        train_loss_mean=math.fsum(final_losses) / len(final_losses),
        norm_mean=mean,
        norm_std=std,
    )


def train(fragments, cfg: TrainConfig, progress=None) -> Detector:
    if cfg.mode == "semi":
        return train_semi_supervised(fragments, cfg, progress)
    return train_supervised(fragments, cfg, progress)


def score_fragment(detector: Detector, fragment) -> float:
    """Reconstruction loss (threshold mode) or anomaly probability (head mode)."""
    model_cfg = detector.model.config
    values = _fragment_values(fragment)
    if values.shape != (model_cfg.channels, model_cfg.fragment_length):
        raise DataError(
            f"fragment shape {values.shape} does not match the detector's "
            f"({model_cfg.channels}, {model_cfg.fragment_length})"
        )
    xn = normalize_values(values, detector.norm_mean, detector.norm_std)
    family = get_family(model_cfg.wavelet)
    decomp = mdwd(xn, family, model_cfg.levels) if model_cfg.levels else None
    with no_grad():
        code, _ = detector.model.encode(xn, decomp)
        if detector.mode == "semi":
            targets = [xn] + (list(decomp.details) if decomp else [])
            return reconstruction_loss(targets, detector.model.decode(code)).item()
        return detector.model.classify(code).item()


def predict_fragment(detector: Detector, fragment):
    """Returns (label, score); the label comparison is >= in both modes."""
    score = score_fragment(detector, fragment)
    cut = detector.threshold if detector.mode == "semi" else 0.5
    return int(score >= cut), score


def evaluate_fragments(detector: Detector, fragments) -> MetricsReport:
    if not fragments:
        raise DataError("no fragments to evaluate")
    preds = [predict_fragment(detector, f)[0] for f in fragments]
    labels = [f.label for f in fragments]
    return compute_metrics(preds, labels)
