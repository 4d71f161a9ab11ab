"""RSSI data representations: positive, normalized, exponential and powed.

Every representation is fitted on the training set only. The fit records
the weakest and strongest received RSSI (sentinels excluded); all four
transforms are then pure element-wise maps.

    positive(x)    = x - (min - 1), 0 for the sentinel or below tau
    normalized(x)  = positive(x) / positive(max)
    exponential(x) = exp(positive(x) / alpha) / exp(-min / alpha)
    powed(x)       = positive(x) ** beta / (-min) ** beta
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lorafp.errors import ConfigError, FitError
from lorafp.ingest import SENTINEL, Fingerprint

KINDS = ("positive", "normalized", "exponential", "powed")
DEFAULT_ALPHA = 24.0
DEFAULT_BETA = math.e


@dataclass(frozen=True)
class RepresentationConfig:
    kind: str
    train_min: float
    train_max: float
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    tau: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown representation {self.kind!r}; expected one of {KINDS}")
        if not self.alpha > 0 or not self.beta > 0:
            raise ConfigError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")
        if not (SENTINEL < self.train_min < 0) or self.train_max < self.train_min:
            raise ConfigError(f"bad training range [{self.train_min}, {self.train_max}]")

    def __call__(self, rssi):
        return transform(self, rssi)


def fit(kind: str, train, alpha: float | None = None, beta: float | None = None,
        tau: float | None = None) -> RepresentationConfig:
    """Fit a representation on training RSSI.

    ``train`` is an (N, 68) RSSI array, a Dataset or a list of Fingerprint.
    """
    rssi = _rssi_matrix(train)
    received = rssi[rssi != SENTINEL]
    if received.size == 0:
        raise FitError("training set has no received RSSI values")
    return RepresentationConfig(
        kind=kind,
        train_min=float(received.min()),
        train_max=float(received.max()),
        alpha=DEFAULT_ALPHA if alpha is None else float(alpha),
        beta=DEFAULT_BETA if beta is None else float(beta),
        tau=None if tau is None else float(tau),
    )


def _rssi_matrix(train):
    if hasattr(train, "rssi") and not isinstance(train, Fingerprint):
        return np.asarray(train.rssi, dtype=float)
    if isinstance(train, (list, tuple)) and train and isinstance(train[0], Fingerprint):
        return np.stack([fp.rssi for fp in train])
    return np.asarray(train, dtype=float)


def positive(cfg: RepresentationConfig, rssi):
    x = np.asarray(rssi, dtype=float)
    out = x - (cfg.train_min - 1.0)
    dead = x == SENTINEL
    if cfg.tau is not None:
        dead = dead | (x < cfg.tau)
    return np.where(dead, 0.0, out)


def normalized(cfg: RepresentationConfig, rssi):
    return positive(cfg, rssi) / (cfg.train_max - cfg.train_min + 1.0)


def exponential(cfg: RepresentationConfig, rssi):
    return np.exp(positive(cfg, rssi) / cfg.alpha) / math.exp(-cfg.train_min / cfg.alpha)


def powed(cfg: RepresentationConfig, rssi):
    p = positive(cfg, rssi)
    # sign-preserving power keeps test values below the training minimum finite and ordered
    return np.sign(p) * np.abs(p) ** cfg.beta / (-cfg.train_min) ** cfg.beta


_FUNCS = {"positive": positive, "normalized": normalized,
          "exponential": exponential, "powed": powed}


def transform(cfg: RepresentationConfig, rssi):
    """Apply the configured representation element-wise.

    Accepts a scalar, an RSSI array of any shape, a Fingerprint or a Dataset.
    """
    if isinstance(rssi, Fingerprint) or hasattr(rssi, "rssi"):
        rssi = rssi.rssi
    return _FUNCS[cfg.kind](cfg, rssi)
