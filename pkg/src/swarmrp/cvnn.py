"""Hybrid complex/real autoencoder that maps a raw IQ range profile to a
per-bin detection profile.

Architecture::

    x (complex, m) -> W1 x + b1 (complex, H) -> modReLU -> Re(.)
                   -> W2 r + b2 (real, m) -> sigmoid -> y in (0, 1)^m

Gradients for complex parameters are stored as ``dL/dRe(w) + 1j * dL/dIm(w)``
(twice the conjugate Wirtinger derivative), so ``w -= lr * grad`` is a
descent step and finite differences along the real and imaginary axes
match the real and imaginary parts of the stored gradient.
"""

import csv
import struct
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .datagen import Dataset
from .metrics import aggregate, score_batch

__all__ = [
    "NetworkParams",
    "Activations",
    "AdamState",
    "TrainConfig",
    "History",
    "modrelu",
    "forward",
    "weighted_mse",
    "backward",
    "adam_step",
    "learning_rate",
    "predict",
    "detect",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointFormatError",
]

SEED_INIT = 1
SEED_SHUFFLE = 2


@dataclass
class NetworkParams:
    W1: np.ndarray  # complex128 (H, m)
    b1: np.ndarray  # complex128 (H,)
    modrelu_bias: np.ndarray  # float64 (H,)
    W2: np.ndarray  # float64 (m, H)
    b2: np.ndarray  # float64 (m,)

    @property
    def m(self) -> int:
        return self.W1.shape[1]

    @property
    def hidden(self) -> int:
        return self.W1.shape[0]

    @classmethod
    def zeros(cls, m: int, hidden: int) -> "NetworkParams":
        return cls(np.zeros((hidden, m), np.complex128), np.zeros(hidden, np.complex128),
                   np.zeros(hidden), np.zeros((m, hidden)), np.zeros(m))

    @classmethod
    def init(cls, m: int, hidden: int, rng: np.random.Generator) -> "NetworkParams":
        """Gaussian init: complex std ``1/sqrt(2*m)`` per component, real std ``1/sqrt(H)``."""
        p = cls.zeros(m, hidden)
        std1 = 1.0 / np.sqrt(2 * m)
        p.W1 = std1 * (rng.standard_normal((hidden, m)) + 1j * rng.standard_normal((hidden, m)))
        p.W2 = rng.standard_normal((m, hidden)) / np.sqrt(hidden)
        return p

    def arrays(self) -> dict[str, np.ndarray]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def copy(self) -> "NetworkParams":
        return NetworkParams(**{k: v.copy() for k, v in self.arrays().items()})

    def allclose(self, other: "NetworkParams", **kw) -> bool:
        return all(np.allclose(a, b, **kw) for a, b in zip(self.arrays().values(),
                                                           other.arrays().values()))

    def array_equal(self, other: "NetworkParams") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays().values(),
                                                        other.arrays().values()))


def modrelu(z, bias):
    """``ReLU(|z| + bias) * exp(1j * angle(z))``; zero at ``z == 0``."""
    z = np.asarray(z, dtype=np.complex128)
    mag = np.abs(z)
    active = (mag + bias > 0) & (mag > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        phase = z.real / mag + 1j * (z.imag / mag)
        out = np.where(active, (mag + bias) * phase, 0.0)
    return out[()] if out.ndim == 0 else out


@dataclass
class Activations:
    x: np.ndarray
    z: np.ndarray
    mag: np.ndarray
    active: np.ndarray
    r: np.ndarray
    y: np.ndarray


def forward(p: NetworkParams, x: np.ndarray) -> tuple[Activations, np.ndarray]:
    """Forward pass over one profile ``(m,)`` or a batch ``(B, m)``."""
    x = np.asarray(x)
    if x.shape[-1] != p.m:
        raise ValueError(f"input has {x.shape[-1]} bins, network expects {p.m}")
    z = x @ p.W1.T + p.b1
    mag = np.abs(z)
    active = (mag + p.modrelu_bias > 0) & (mag > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(active, (mag + p.modrelu_bias) * (z.real / mag), 0.0)
    y = _sigmoid(r @ p.W2.T + p.b2)
    return Activations(x, z, mag, active, r, y), y


def _sigmoid(a: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _bin_weights(labels: np.ndarray, positive_weight: float) -> np.ndarray:
    return np.where(np.asarray(labels, dtype=bool), positive_weight, 1.0)


def weighted_mse(y: np.ndarray, labels: np.ndarray, positive_weight: float = 10.0) -> float:
    """Class-weighted MSE: per-profile mean over bins, averaged over the batch."""
    y = np.asarray(y, dtype=np.float64)
    labels = np.asarray(labels)
    if y.shape != labels.shape:
        raise ValueError(f"output shape {y.shape} does not match labels {labels.shape}")
    return float(np.mean(_bin_weights(labels, positive_weight) * (y - labels) ** 2))


def backward(p: NetworkParams, acts: Activations, labels: np.ndarray,
             positive_weight: float = 10.0) -> NetworkParams:
    """Exact gradient of :func:`weighted_mse` for the batch in ``acts``."""
    y = np.atleast_2d(acts.y)
    labels = np.atleast_2d(labels).astype(np.float64)
    if y.shape != labels.shape:
        raise ValueError(f"output shape {y.shape} does not match labels {labels.shape}")
    x = np.atleast_2d(acts.x)
    z, mag, active, r = (np.atleast_2d(a) for a in (acts.z, acts.mag, acts.active, acts.r))

    dy = 2.0 * _bin_weights(labels, positive_weight) * (y - labels) / y.size
    da = dy * y * (1.0 - y)
    gW2 = da.T @ r
    gb2 = da.sum(axis=0)
    dr = da @ p.W2

    # r = Re(z) * (|z| + b) / |z| on the active set
    b = p.modrelu_bias
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(active, 1.0 / mag, 0.0)
    zr, zi = z.real, z.imag
    inv3 = inv**3
    dr_dre = np.where(active, 1.0 + b * zi**2 * inv3, 0.0)
    dr_dim = np.where(active, -b * zr * zi * inv3, 0.0)
    gz = dr * (dr_dre + 1j * dr_dim)
    gbias = np.sum(dr * zr * inv, axis=0)

    gW1 = gz.T @ np.conj(x)
    gb1 = gz.sum(axis=0)
    return NetworkParams(gW1, gb1, gbias, gW2, gb2)


@dataclass
class AdamState:
    """Adam moments for every real degree of freedom.

    Complex arrays are handled through float64 views, so real and imaginary
    parts get independent moments.
    """

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def like(cls, p: NetworkParams, beta1: float = 0.9, beta2: float = 0.999,
             eps: float = 1e-8) -> "AdamState":
        shapes = {k: _real_view(a).shape for k, a in p.arrays().items()}
        return cls({k: np.zeros(s) for k, s in shapes.items()},
                   {k: np.zeros(s) for k, s in shapes.items()}, 0, beta1, beta2, eps)


def _real_view(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    return a.view(np.float64) if np.iscomplexobj(a) else a


def adam_step(state: AdamState, p: NetworkParams, g: NetworkParams,
              lr: float) -> tuple[AdamState, NetworkParams]:
    """One bias-corrected Adam update, applied in place to ``p`` and ``state``."""
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for name, param in p.arrays().items():
        grad = _real_view(getattr(g, name))
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad**2
        updated = _real_view(param) - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        setattr(p, name, updated.view(param.dtype) if np.iscomplexobj(param) else updated)
    return state, p


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 512
    lr0: float = 1e-3
    lr_halving_period: int = 20
    positive_weight: float = 10.0
    threshold: float = 0.5
    hidden_width: int = 256
    seed: int = 0
    exclusion_window: int = 199

    def validate(self) -> None:
        if min(self.epochs, self.batch_size, self.lr_halving_period, self.hidden_width) < 1:
            raise ValueError("epochs, batch size, halving period and hidden width must be >= 1")
        if self.lr0 < 0 or self.positive_weight <= 0:
            raise ValueError("lr0 must be >= 0 and positive_weight > 0")
        if not 0 < self.threshold < 1:
            raise ValueError("threshold must lie in (0, 1)")


def learning_rate(cfg: TrainConfig, epoch: int) -> float:
    return cfg.lr0 * 0.5 ** (epoch // cfg.lr_halving_period)


@dataclass
class History:
    epoch: list[int] = field(default_factory=list)
    lr: list[float] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    valid_loss: list[float | None] = field(default_factory=list)
    valid_pd: list[float | None] = field(default_factory=list)
    valid_pfa: list[float | None] = field(default_factory=list)
    best_epoch: int | None = None
    best_params: NetworkParams | None = None

    def rows(self) -> list[tuple]:
        return list(zip(self.epoch, self.lr, self.train_loss, self.valid_loss,
                        self.valid_pd, self.valid_pfa))

    def write_csv(self, path, header_lines: list[str] = ()) -> None:
        with open(path, "w", newline="") as f:
            for line in header_lines:
                f.write(f"# {line}\n")
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["epoch", "lr", "train_loss", "valid_loss", "valid_pd", "valid_pfa"])
            for row in self.rows():
                w.writerow(["" if v is None else repr(v) for v in row])


def predict(p: NetworkParams, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
    """Detection-profile values in (0, 1) for one profile or a batch."""
    x = np.asarray(x)
    if x.ndim == 1:
        return forward(p, x.astype(np.complex128))[1]
    out = np.empty(x.shape, dtype=np.float64)
    for start in range(0, x.shape[0], batch_size):
        out[start:start + batch_size] = forward(p, x[start:start + batch_size].astype(np.complex128))[1]
    return out


def detect(p: NetworkParams, x: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return predict(p, x) > threshold


def _evaluate(p: NetworkParams, ds: Dataset, cfg: TrainConfig) -> tuple[float, float | None, float | None]:
    y = predict(p, ds.samples, cfg.batch_size)
    loss = weighted_mse(y, ds.labels, cfg.positive_weight)
    pd, pfa = aggregate(score_batch(y > cfg.threshold, ds, cfg.exclusion_window))
    return loss, pd, pfa


def train(train_set: Dataset, valid_set: Dataset | None, cfg: TrainConfig,
          params: NetworkParams | None = None, log=None) -> tuple[NetworkParams, History]:
    """Mini-batch Adam training with a step-halving learning rate.

    The epoch's training loss is the mean of its batch losses.  Final-epoch
    weights are returned; the best-validation-loss weights are kept in the
    history.
    """
    cfg.validate()
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    m = train_set.m
    if valid_set is not None and len(valid_set) and valid_set.m != m:
        raise ValueError(f"validation profiles have {valid_set.m} bins, training profiles {m}")
    if params is None:
        params = NetworkParams.init(m, cfg.hidden_width,
                                    np.random.default_rng([cfg.seed, SEED_INIT]))
    elif params.m != m:
        raise ValueError(f"network expects {params.m} bins, training profiles have {m}")
    shuffle_rng = np.random.default_rng([cfg.seed, SEED_SHUFFLE])
    state = AdamState.like(params)
    history = History()
    best = np.inf

    for epoch in range(cfg.epochs):
        lr = learning_rate(cfg, epoch)
        order = shuffle_rng.permutation(len(train_set))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = np.sort(order[start:start + cfg.batch_size])
            x = train_set.samples[idx].astype(np.complex128)
            labels = train_set.labels[idx]
            acts, y = forward(params, x)
            losses.append(weighted_mse(y, labels, cfg.positive_weight))
            grads = backward(params, acts, labels, cfg.positive_weight)
            adam_step(state, params, grads, lr)
        history.epoch.append(epoch)
        history.lr.append(lr)
        history.train_loss.append(float(np.mean(losses)))

        if valid_set is not None and len(valid_set):
            vloss, pd, pfa = _evaluate(params, valid_set, cfg)
            if vloss < best:
                best = vloss
                history.best_epoch = epoch
                history.best_params = params.copy()
        else:
            vloss = pd = pfa = None
        history.valid_loss.append(vloss)
        history.valid_pd.append(pd)
        history.valid_pfa.append(pfa)
        if log is not None:
            log(f"epoch {epoch:3d} lr {lr:.2e} train {history.train_loss[-1]:.5f} valid {vloss}"
                f" pd {pd} pfa {pfa}")
    return params, history


# --- RPNN checkpoint format ---------------------------------------------------

MAGIC = b"RPNN"
VERSION = 1
_HEADER = struct.Struct("<4sHII")


class CheckpointFormatError(ValueError):
    pass


def save_checkpoint(path: str | Path, p: NetworkParams) -> None:
    """Little-endian header then W1, b1 (interleaved re/im), modrelu_bias, W2, b2 as f64."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, p.m, p.hidden))
        f.write(np.ascontiguousarray(p.W1, dtype="<c16").tobytes())
        f.write(np.ascontiguousarray(p.b1, dtype="<c16").tobytes())
        for a in (p.modrelu_bias, p.W2, p.b2):
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> NetworkParams:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointFormatError("truncated checkpoint header")
    magic, version, m, hidden = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"unsupported RPNN version {version}")
    layout = [("W1", "<c16", (hidden, m)), ("b1", "<c16", (hidden,)),
              ("modrelu_bias", "<f8", (hidden,)), ("W2", "<f8", (m, hidden)), ("b2", "<f8", (m,))]
    expected = _HEADER.size + sum(np.dtype(dt).itemsize * int(np.prod(shape)) for _, dt, shape in layout)
    if len(raw) != expected:
        raise CheckpointFormatError(f"checkpoint has {len(raw)} bytes, expected {expected}")
    offset = _HEADER.size
    arrays = {}
    for name, dt, shape in layout:
        count = int(np.prod(shape))
        arrays[name] = np.frombuffer(raw, dt, count, offset).reshape(shape).astype(dt[1:])
        offset += count * np.dtype(dt).itemsize
    return NetworkParams(**arrays)
