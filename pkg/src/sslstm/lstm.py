"""Single-layer LSTM regressor written directly in numpy.

The cell follows the usual gate order (forget, input, candidate, cell
update, output) on the concatenated vector ``[h_prev, x]``.  A linear
readout maps the last hidden state to the next-step prediction.  Training
is full-batch gradient descent on the mean squared error with global
gradient-norm clipping and a step-decay learning rate.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DivergenceDetected, ShapeMismatch, WindowLengthMismatch

GATES = ("f", "i", "C", "o")
PARAM_NAMES = ("W_f", "W_i", "W_C", "W_o", "b_f", "b_i", "b_C", "b_o", "W_y", "b_y")

MODEL_FORMAT = "sslstm-lstm"
MODEL_VERSION = 1


def sigmoid(z):
    # split by sign so large |z| never overflows exp
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LstmParams:
    W_f: np.ndarray
    W_i: np.ndarray
    W_C: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_C: np.ndarray
    b_o: np.ndarray
    W_y: np.ndarray
    b_y: np.ndarray

    @property
    def hidden_size(self):
        return self.b_f.shape[0]

    @property
    def input_size(self):
        return self.W_f.shape[1] - self.hidden_size

    @property
    def output_size(self):
        return self.b_y.shape[0]

    @classmethod
    def initialize(cls, input_size, hidden_size, output_size=None, rng=None):
        """Uniform ``[-1/sqrt(H), 1/sqrt(H)]`` initialisation."""
        rng = np.random.default_rng(rng)
        output_size = input_size if output_size is None else output_size
        H, D = hidden_size, input_size
        bound = 1.0 / math.sqrt(H)
        arrays = {}
        for g in GATES:
            arrays[f"W_{g}"] = rng.uniform(-bound, bound, (H, H + D))
        for g in GATES:
            arrays[f"b_{g}"] = rng.uniform(-bound, bound, H)
        arrays["W_y"] = rng.uniform(-bound, bound, (output_size, H))
        arrays["b_y"] = rng.uniform(-bound, bound, output_size)
        return cls(**arrays)

    @classmethod
    def zeros(cls, input_size, hidden_size, output_size=None):
        output_size = input_size if output_size is None else output_size
        H, D = hidden_size, input_size
        arrays = {f"W_{g}": np.zeros((H, H + D)) for g in GATES}
        arrays.update({f"b_{g}": np.zeros(H) for g in GATES})
        arrays["W_y"] = np.zeros((output_size, H))
        arrays["b_y"] = np.zeros(output_size)
        return cls(**arrays)

    def arrays(self):
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self):
        return LstmParams(**{k: v.copy() for k, v in self.arrays().items()})

    def stacked(self):
        """Gate weights stacked as ``(4H, H + D)`` and biases as ``(4H,)``."""
        W = np.concatenate([self.W_f, self.W_i, self.W_C, self.W_o], axis=0)
        b = np.concatenate([self.b_f, self.b_i, self.b_C, self.b_o])
        return W, b

    def check(self):
        H = self.hidden_size
        D = self.input_size
        for g in GATES:
            if getattr(self, f"W_{g}").shape != (H, H + D) or getattr(self, f"b_{g}").shape != (H,):
                raise ShapeMismatch(f"gate {g} has inconsistent shape")
        if self.W_y.shape != (self.output_size, H):
            raise ShapeMismatch("readout weight shape does not match hidden size")
        for name, arr in self.arrays().items():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"parameter {name} has non-finite entries")


@dataclass(frozen=True)
class Hyperparams:
    hidden_size: int = 200
    initial_lr: float = 0.015
    max_epochs: int = 1000
    lr_drop_period: int = 350
    lr_drop_factor: float = 0.01
    grad_clip: float = 1.0

    def __post_init__(self):
        if self.hidden_size < 1 or self.max_epochs < 1 or self.lr_drop_period < 1:
            raise ValueError("hidden_size, max_epochs and lr_drop_period must be positive")
        if not self.initial_lr > 0:
            raise ValueError("initial_lr must be positive")
        if not 0 < self.lr_drop_factor <= 1:
            raise ValueError("lr_drop_factor must lie in (0, 1]")
        if not self.grad_clip > 0:
            raise ValueError("grad_clip must be positive")

    def learning_rate(self, epoch):
        return self.initial_lr * self.lr_drop_factor ** (epoch // self.lr_drop_period)


# Per-type settings for small-amplitude oscillation series ...
SMALL_OSCILLATION = {
    "Trend": Hyperparams(200, 0.015, 1000, 350, 0.01),
    "Frequency": Hyperparams(250, 0.01, 1500, 300, 0.015),
    "Residue": Hyperparams(300, 0.005, 2000, 400, 0.005),
}
# ... and for large-amplitude oscillation series.
LARGE_OSCILLATION = {
    "Trend": Hyperparams(250, 0.015, 1200, 350, 0.01),
    "Frequency": Hyperparams(275, 0.01, 1500, 325, 0.015),
    "Residue": Hyperparams(300, 0.005, 1750, 375, 0.005),
}


@dataclass
class Normalizer:
    """Per-channel min-max scaling to ``[0, 1]``.

    A channel with no spread is given unit span so it maps to zero instead
    of dividing by zero.
    """

    min: np.ndarray
    max: np.ndarray

    @classmethod
    def fit(cls, values):
        x = np.asarray(values, dtype=float)
        x = x.reshape(-1, 1) if x.ndim == 1 else x.reshape(-1, x.shape[-1])
        lo, hi = x.min(axis=0), x.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1.0)
        return cls(lo, hi)

    @property
    def span(self):
        return self.max - self.min

    def normalize(self, x):
        return (np.asarray(x, dtype=float) - self.min) / self.span

    def denormalize(self, x):
        return np.asarray(x, dtype=float) * self.span + self.min


@dataclass
class TrainingWindowSet:
    inputs: np.ndarray
    targets: np.ndarray
    window_length: int

    def __post_init__(self):
        if len(self.inputs) != len(self.targets):
            raise ShapeMismatch("inputs and targets differ in length")

    def __len__(self):
        return len(self.targets)

    @classmethod
    def from_series(cls, values, window_length):
        """Stride-1 windows of ``window_length`` samples, each targeting the next sample.

        ``values`` is ``(T,)`` or ``(T, channels)``.
        """
        x = np.asarray(values, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        W = int(window_length)
        if W < 1 or x.shape[0] <= W:
            raise ValueError(f"series of length {x.shape[0]} is too short for windows of {W}")
        idx = np.arange(x.shape[0] - W)[:, None] + np.arange(W)[None, :]
        return cls(inputs=x[idx], targets=x[W:], window_length=W)


@dataclass
class SequenceCache:
    xs: np.ndarray
    hs: list
    cs: list
    gates: list
    h_last: np.ndarray


@dataclass
class LstmModel:
    params: LstmParams
    hyperparams: Hyperparams
    normalizer: Normalizer
    window_length: int
    seed: int = 0
    loss_history: list = field(default_factory=list)

    @property
    def final_loss(self):
        return self.loss_history[-1] if self.loss_history else float("nan")

    def predict(self, windows):
        """Denormalised next-step predictions for raw windows ``(N, W, D)``."""
        x = np.asarray(windows, dtype=float)
        if x.ndim == 2:
            x = x[..., None]
        if x.shape[1] != self.window_length:
            raise WindowLengthMismatch(
                f"window length {x.shape[1]} != trained length {self.window_length}"
            )
        y, _ = forward_sequence(self.normalizer.normalize(x), self.params)
        return self.normalizer.denormalize(y)


def cell_forward(x, h_prev, c_prev, p):
    """One LSTM step.  Works on single vectors or on ``(B, .)`` batches."""
    H = p.hidden_size
    x = np.asarray(x, dtype=float)
    if h_prev.shape[-1] != H or c_prev.shape[-1] != H or x.shape[-1] != p.input_size:
        raise ShapeMismatch(
            f"expected input {p.input_size} and state {H}, got {x.shape[-1]} / "
            f"{h_prev.shape[-1]} / {c_prev.shape[-1]}"
        )
    z = np.concatenate([h_prev, x], axis=-1)
    f = sigmoid(z @ p.W_f.T + p.b_f)
    i = sigmoid(z @ p.W_i.T + p.b_i)
    g = np.tanh(z @ p.W_C.T + p.b_C)
    c = f * c_prev + i * g
    o = sigmoid(z @ p.W_o.T + p.b_o)
    tc = np.tanh(c)
    h = o * tc
    return h, c, {"z": z, "f": f, "i": i, "g": g, "o": o, "c_prev": c_prev, "tanh_c": tc}


def forward_sequence(x, p, h0=None, c0=None):
    """Run the cell over ``x`` of shape ``(B, T, D)`` and read out the last step."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    B, T, D = x.shape
    if D != p.input_size:
        raise ShapeMismatch(f"input has {D} channels, model expects {p.input_size}")
    H = p.hidden_size
    W, b = p.stacked()
    Wh, Wx = W[:, :H], W[:, H:]
    xw = x @ Wx.T + b
    h = np.zeros((B, H)) if h0 is None else h0
    c = np.zeros((B, H)) if c0 is None else c0
    hs, cs, gates = [h], [c], []
    for t in range(T):
        a = h @ Wh.T + xw[:, t]
        f = sigmoid(a[:, :H])
        i = sigmoid(a[:, H:2 * H])
        g = np.tanh(a[:, 2 * H:3 * H])
        o = sigmoid(a[:, 3 * H:])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        hs.append(h)
        cs.append(c)
        gates.append((f, i, g, o, tc))
    y = h @ p.W_y.T + p.b_y
    return y, SequenceCache(xs=x, hs=hs, cs=cs, gates=gates, h_last=h)


def backward(cache, dy, p):
    """Backpropagation through time for a loss gradient ``dy`` on the readout.

    Returns gradients keyed like :data:`PARAM_NAMES`.
    """
    dy = np.asarray(dy, dtype=float).reshape(cache.h_last.shape[0], -1)
    H = p.hidden_size
    W, _ = p.stacked()
    Wh = W[:, :H]
    x = cache.xs
    T = x.shape[1]
    grads = {"W_y": dy.T @ cache.h_last, "b_y": dy.sum(axis=0)}
    dh = dy @ p.W_y
    dc = np.zeros_like(dh)
    dW = np.zeros_like(W)
    db = np.zeros(4 * H)
    for t in range(T - 1, -1, -1):
        f, i, g, o, tc = cache.gates[t]
        c_prev = cache.cs[t]
        h_prev = cache.hs[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc ** 2)
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        da = np.concatenate([
            df * f * (1.0 - f),
            di * i * (1.0 - i),
            dg * (1.0 - g ** 2),
            do * o * (1.0 - o),
        ], axis=1)
        dW += da.T @ np.concatenate([h_prev, x[:, t]], axis=1)
        db += da.sum(axis=0)
        dh = da @ Wh
        dc = dc * f
    for k, gname in enumerate(GATES):
        grads[f"W_{gname}"] = dW[k * H:(k + 1) * H]
        grads[f"b_{gname}"] = db[k * H:(k + 1) * H]
    return grads


def mse_loss(y, target):
    diff = y - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def loss_and_grads(p, inputs, targets):
    y, cache = forward_sequence(inputs, p)
    loss, dy = mse_loss(y, targets)
    return loss, backward(cache, dy, p)


def clip_gradients(grads, max_norm):
    norm = math.sqrt(sum(float(np.sum(g ** 2)) for g in grads.values()))
    if norm > max_norm:
        scale = max_norm / norm
        grads = {k: g * scale for k, g in grads.items()}
    return grads, norm


def train(windows, hp, seed=0, normalizer=None, callback=None) -> LstmModel:
    """Fit an LSTM to ``windows`` (raw values) and return the trained model.

    The normaliser is fitted on the windows unless one is supplied.  The run
    is fully determined by ``seed``.
    """
    inputs = np.asarray(windows.inputs, dtype=float)
    targets = np.asarray(windows.targets, dtype=float)
    if inputs.ndim == 2:
        inputs = inputs[..., None]
    if targets.ndim == 1:
        targets = targets[:, None]
    if len(inputs) == 0:
        raise ValueError("no training windows")
    if normalizer is None:
        normalizer = Normalizer.fit(np.concatenate([inputs.reshape(-1, inputs.shape[-1]), targets]))
    with np.errstate(over="ignore", invalid="ignore"):
        xn = normalizer.normalize(inputs)
        tn = normalizer.normalize(targets)
    params = LstmParams.initialize(inputs.shape[-1], hp.hidden_size, targets.shape[-1], rng=seed)
    history = []
    for epoch in range(hp.max_epochs):
        y, cache = forward_sequence(xn, params)
        loss, dy = mse_loss(y, tn)
        if not math.isfinite(loss):
            raise DivergenceDetected(f"loss became {loss} at epoch {epoch}")
        history.append(loss)
        grads = backward(cache, dy, params)
        grads, _ = clip_gradients(grads, hp.grad_clip)
        lr = hp.learning_rate(epoch)
        for name in PARAM_NAMES:
            getattr(params, name)[...] -= lr * grads[name]
        if callback is not None:
            callback(epoch, loss)
    y, _ = forward_sequence(xn, params)
    final, _ = mse_loss(y, tn)
    if not math.isfinite(final):
        raise DivergenceDetected("loss became non-finite after the last update")
    history.append(final)
    return LstmModel(params, hp, normalizer, windows.window_length, int(seed), history)


def predict_one_step(model, window):
    """Next value after a raw ``window``; a scalar for single-channel models."""
    x = np.asarray(window, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.shape[0] != model.window_length:
        raise WindowLengthMismatch(
            f"window length {x.shape[0]} != trained length {model.window_length}"
        )
    y = model.predict(x[None])[0]
    return float(y[0]) if y.size == 1 else y


def to_channels(z):
    """Complex array ``(...)`` to real ``(..., 2)`` holding (real, imag)."""
    z = np.asarray(z)
    return np.stack([z.real, z.imag], axis=-1).astype(float)


def from_channels(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0] + 1j * x[..., 1]


def save_model(path, model):
    """Write ``model`` as an ``.npz`` archive.

    The archive holds the ten parameter arrays under their names plus a
    ``meta`` entry: a JSON document with ``format``, ``version``, sizes,
    window length, seed, hyperparameters and normaliser bounds.
    """
    p = model.params
    meta = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "input_size": p.input_size,
        "hidden_size": p.hidden_size,
        "output_size": p.output_size,
        "window_length": model.window_length,
        "seed": model.seed,
        "hyperparams": asdict(model.hyperparams),
        "normalizer": {"min": model.normalizer.min.tolist(), "max": model.normalizer.max.tolist()},
        "final_loss": model.final_loss,
    }
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), **p.arrays())


def load_model(path) -> LstmModel:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format") != MODEL_FORMAT:
            raise ValueError(f"{path} is not an {MODEL_FORMAT} archive")
        if meta.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {meta.get('version')}")
        params = LstmParams(**{name: data[name].copy() for name in PARAM_NAMES})
    params.check()
    norm = Normalizer(np.asarray(meta["normalizer"]["min"]), np.asarray(meta["normalizer"]["max"]))
    hp = Hyperparams(**meta["hyperparams"])
    return LstmModel(params, hp, norm, meta["window_length"], meta["seed"], [meta["final_loss"]])
