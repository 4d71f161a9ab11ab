"""Feed-forward regression network written directly in numpy.

Hidden layers run affine -> batch norm -> ReLU -> inverted dropout; the
output layer is affine only. Training minimizes the mean squared error of
standardized (lat, lon) targets plus an optional L2 penalty on the weight
matrices, using Adam on shuffled mini-batches with early stopping on the
validation loss.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from lorafp.errors import ConfigError, TrainingError

DEFAULT_WIDTHS = (1024, 1024, 1024, 256, 128, 128, 2)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# spreading factor 7..12 mapped onto [0, 1]
SF_SHIFT = 7.0
SF_SCALE = 5.0


@dataclass(frozen=True)
class MlpConfig:
    layer_widths: tuple = DEFAULT_WIDTHS
    input_dim: int = 69
    dropout_rate: float = 0.15
    l2_lambda: float = 0.0
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 2000
    patience: int = 50
    seed: int = 0
    bn_momentum: float = 0.99
    bn_eps: float = 1e-8
    # last input column carries the raw spreading factor
    sf_input: bool = True

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if not self.layer_widths or self.layer_widths[-1] != 2:
            raise ConfigError("the last layer must have width 2 (lat, lon)")
        if any(w < 1 for w in self.layer_widths) or self.input_dim < 1:
            raise ConfigError("layer widths must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if self.l2_lambda < 0 or not self.learning_rate > 0:
            raise ConfigError("l2_lambda must be >= 0 and learning_rate > 0")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch_size, max_epochs and patience must be >= 1")


@dataclass
class Layer:
    W: np.ndarray
    b: np.ndarray
    # batch-norm state; None on the output layer
    gamma: np.ndarray | None = None
    shift: np.ndarray | None = None
    running_mean: np.ndarray | None = None
    running_var: np.ndarray | None = None

    @property
    def hidden(self) -> bool:
        return self.gamma is not None

    def params(self):
        names = ("W", "b", "gamma", "shift") if self.hidden else ("W", "b")
        return [(n, getattr(self, n)) for n in names]


@dataclass
class MlpModel:
    config: MlpConfig
    layers: list
    input_shift: np.ndarray
    input_scale: np.ndarray
    target_mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    target_std: np.ndarray = field(default_factory=lambda: np.ones(2))

    # -- forward / backward ------------------------------------------------

    def forward(self, X, train=False, rng=None, batch_stats=None, cache=None):
        """Network output in standardized target units.

        ``train`` enables dropout and running-statistic updates;
        ``batch_stats`` (default: same as ``train``) selects batch rather than
        running statistics in batch norm. Pass a list as ``cache`` to collect
        what :meth:`backward` needs.
        """
        if batch_stats is None:
            batch_stats = train
        eps = self.config.bn_eps
        p = self.config.dropout_rate
        h = (np.asarray(X, dtype=float) - self.input_shift) / self.input_scale
        for layer in self.layers:
            z = h @ layer.W + layer.b
            if not layer.hidden:
                if cache is not None:
                    cache.append((h, None))
                return z
            if batch_stats:
                mu = z.mean(axis=0)
                var = z.var(axis=0)
                if train:
                    m = self.config.bn_momentum
                    layer.running_mean = m * layer.running_mean + (1 - m) * mu
                    layer.running_var = m * layer.running_var + (1 - m) * var
            else:
                mu, var = layer.running_mean, layer.running_var
            inv_std = 1.0 / np.sqrt(var + eps)
            zhat = (z - mu) * inv_std
            a = layer.gamma * zhat + layer.shift
            r = np.maximum(a, 0.0)
            mask = None
            if train and p > 0:
                mask = (rng.random(r.shape) >= p) / (1.0 - p)
                r = r * mask
            if cache is not None:
                cache.append((h, (zhat, inv_std, a, mask, batch_stats)))
            h = r
        raise AssertionError("network has no output layer")

    def loss(self, X, T, train=False, rng=None, batch_stats=None, cache=None):
        """Mean squared error on standardized targets plus the L2 penalty."""
        out = self.forward(X, train=train, rng=rng, batch_stats=batch_stats, cache=cache)
        mse = float(np.mean((out - T) ** 2))
        return mse + self.l2_penalty(), out

    def l2_penalty(self) -> float:
        lam = self.config.l2_lambda
        if lam == 0:
            return 0.0
        return lam * sum(float(np.sum(layer.W ** 2)) for layer in self.layers)

    def backward(self, out, T, cache):
        """Gradients for every trainable array, aligned with :meth:`parameters`."""
        lam = self.config.l2_lambda
        grads = [None] * len(self.layers)
        d = 2.0 * (out - T) / out.size
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            h, bn = cache[i]
            if bn is not None:
                zhat, inv_std, a, mask, batch_stats = bn
                if mask is not None:
                    d = d * mask
                da = d * (a > 0)
                g_gamma = (da * zhat).sum(axis=0)
                g_shift = da.sum(axis=0)
                dzhat = da * layer.gamma
                if batch_stats:
                    n = len(dzhat)
                    dz = inv_std / n * (n * dzhat - dzhat.sum(axis=0)
                                        - zhat * (dzhat * zhat).sum(axis=0))
                else:
                    dz = dzhat * inv_std
            else:
                dz = d
            gW = h.T @ dz
            if lam:
                gW = gW + 2.0 * lam * layer.W
            gb = dz.sum(axis=0)
            grads[i] = [gW, gb] if bn is None else [gW, gb, g_gamma, g_shift]
            d = dz @ layer.W.T
        return [g for layer_grads in grads for g in layer_grads]

    def parameters(self):
        """Trainable arrays in a fixed order: W, b[, gamma, shift] per layer."""
        return [arr for layer in self.layers for _, arr in layer.params()]

    def parameter_names(self):
        return [f"layer{i}.{n}" for i, layer in enumerate(self.layers) for n, _ in layer.params()]

    # -- inference ---------------------------------------------------------

    def predict(self, X, batch_size: int = 8192) -> np.ndarray:
        """(lat, lon) in degrees; dropout off, batch norm on running statistics."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.config.input_dim:
            raise ValueError(f"query dimension {X.shape[1]} != {self.config.input_dim}")
        parts = [self.forward(X[i:i + batch_size]) for i in range(0, len(X), batch_size)]
        out = np.concatenate(parts) if parts else np.empty((0, 2))
        out = out * self.target_std + self.target_mean
        return out[0] if single else out

    def evaluate_loss(self, X, Y, batch_size: int = 8192) -> float:
        """Inference-mode MSE on standardized targets (no penalty term)."""
        T = self.standardize(Y)
        total = 0.0
        for i in range(0, len(X), batch_size):
            out = self.forward(X[i:i + batch_size])
            total += float(np.sum((out - T[i:i + batch_size]) ** 2))
        return total / T.size

    def standardize(self, Y):
        return (np.asarray(Y, dtype=float) - self.target_mean) / self.target_std

    def copy(self) -> "MlpModel":
        return copy.deepcopy(self)


def build(cfg: MlpConfig | None = None) -> MlpModel:
    """Fresh network: He-uniform weights, zero biases, gamma 1, shift 0.

    Weights of a layer with fan-in ``f`` are drawn from U(-sqrt(6/f),
    sqrt(6/f)) using a generator seeded with ``cfg.seed``.
    """
    cfg = cfg or MlpConfig()
    rng = np.random.default_rng([0, cfg.seed])
    layers = []
    fan_in = cfg.input_dim
    for i, width in enumerate(cfg.layer_widths):
        limit = math.sqrt(6.0 / fan_in)
        W = rng.uniform(-limit, limit, size=(fan_in, width))
        b = np.zeros(width)
        if i < len(cfg.layer_widths) - 1:
            layers.append(Layer(W, b, np.ones(width), np.zeros(width),
                                np.zeros(width), np.ones(width)))
        else:
            layers.append(Layer(W, b))
        fan_in = width
    shift = np.zeros(cfg.input_dim)
    scale = np.ones(cfg.input_dim)
    if cfg.sf_input:
        shift[-1] = SF_SHIFT
        scale[-1] = SF_SCALE
    return MlpModel(cfg, layers, shift, scale)


@dataclass
class TrainingHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_epoch: int = 0

    @property
    def best_val_loss(self) -> float:
        return self.val_loss[self.best_epoch - 1]


class EarlyStopping:
    """Tracks the best validation loss; epochs are numbered from 1.

    Training stops once more than ``patience`` consecutive epochs have
    passed without a strict improvement.
    """

    def __init__(self, patience: int):
        self.patience = patience
        self.best = math.inf
        self.best_epoch = 0
        self.wait = 0

    def update(self, epoch: int, loss: float) -> tuple[bool, bool]:
        """Record one epoch; returns (improved, should_stop)."""
        if loss < self.best:
            self.best = loss
            self.best_epoch = epoch
            self.wait = 0
            return True, False
        self.wait += 1
        return False, self.wait > self.patience


class Adam:
    def __init__(self, params, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=ADAM_EPS):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1 - self.beta1 ** self.t
        c2 = 1 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def train(model: MlpModel, train_set, val_set, cfg: MlpConfig | None = None,
          callback=None):
    """Fit ``model`` on ``train_set = (X, Y)``; returns (best model, history).

    The returned model holds the parameters (and batch-norm running
    statistics) from the epoch with the lowest validation loss. ``callback``
    is called as ``callback(epoch, train_loss, val_loss)`` after each epoch.
    """
    cfg = cfg or model.config
    X, Y = (np.asarray(a, dtype=float) for a in train_set)
    Xv, Yv = (np.asarray(a, dtype=float) for a in val_set)
    if len(X) == 0 or len(Xv) == 0:
        raise ConfigError("training and validation sets must be non-empty")
    model = model.copy()
    model.config = cfg
    model.target_mean = Y.mean(axis=0)
    std = Y.std(axis=0)
    model.target_std = np.where(std > 0, std, 1.0)
    T = model.standardize(Y)

    seeds = np.random.SeedSequence([1, cfg.seed]).spawn(2)
    shuffle_rng = np.random.default_rng(seeds[0])
    dropout_rng = np.random.default_rng(seeds[1])
    params = model.parameters()
    opt = Adam(params, cfg.learning_rate)
    stopper = EarlyStopping(cfg.patience)
    history = TrainingHistory()
    best = model.copy()

    n = len(X)
    for epoch in range(1, cfg.max_epochs + 1):
        order = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            b = order[start:start + cfg.batch_size]
            cache = []
            out = model.forward(X[b], train=True, rng=dropout_rng, cache=cache)
            total += float(np.sum((out - T[b]) ** 2))
            grads = model.backward(out, T[b], cache)
            opt.step(params, grads)
        train_loss = total / T.size
        val_loss = model.evaluate_loss(Xv, Yv)
        if not (math.isfinite(train_loss) and math.isfinite(val_loss)):
            raise TrainingError(f"non-finite loss at epoch {epoch}", epoch=epoch)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        if callback is not None:
            callback(epoch, train_loss, val_loss)
        improved, stop = stopper.update(epoch, val_loss)
        if improved:
            best = model.copy()
        history.stopped_epoch = epoch
        if stop:
            break
    history.best_epoch = stopper.best_epoch
    return best, history


def gradient_check(model: MlpModel, X, Y, step: float = 1e-5, floor: float = 1e-6) -> float:
    """Largest relative gap between backprop and central-difference gradients.

    Uses batch statistics in batch norm and no dropout. The relative error
    of one entry is ``|a - n| / max(|a| + |n|, floor)``.
    """
    model = model.copy()
    X = np.asarray(X, dtype=float)
    T = model.standardize(Y)

    def f():
        return model.loss(X, T, train=False, batch_stats=True)[0]

    cache = []
    _, out = model.loss(X, T, train=False, batch_stats=True, cache=cache)
    analytic = model.backward(out, T, cache)
    worst = 0.0
    for p, g in zip(model.parameters(), analytic):
        flat = p.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = f()
            flat[j] = orig - step
            down = f()
            flat[j] = orig
            num = (up - down) / (2 * step)
            err = abs(gflat[j] - num) / max(abs(gflat[j]) + abs(num), floor)
            worst = max(worst, err)
    return worst


# -- persistence -------------------------------------------------------------

def save(model: MlpModel, path):
    arrays = {
        "input_shift": model.input_shift,
        "input_scale": model.input_scale,
        "target_mean": model.target_mean,
        "target_std": model.target_std,
    }
    for i, layer in enumerate(model.layers):
        for name in ("W", "b", "gamma", "shift", "running_mean", "running_var"):
            arr = getattr(layer, name)
            if arr is not None:
                arrays[f"layer{i}.{name}"] = arr
    cfg = asdict(model.config)
    arrays["config"] = np.frombuffer(json.dumps(cfg).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load(path) -> MlpModel:
    with np.load(path) as z:
        cfg = MlpConfig(**json.loads(bytes(z["config"]).decode()))
        layers = []
        for i in range(len(cfg.layer_widths)):
            get = (lambda name, i=i: z[f"layer{i}.{name}"].copy()
                   if f"layer{i}.{name}" in z else None)
            layers.append(Layer(get("W"), get("b"), get("gamma"), get("shift"),
                                get("running_mean"), get("running_var")))
        return MlpModel(cfg, layers, z["input_shift"].copy(), z["input_scale"].copy(),
                        z["target_mean"].copy(), z["target_std"].copy())
