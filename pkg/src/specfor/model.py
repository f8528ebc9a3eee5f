"""Logistic-regression classifier with a deterministic training loop.

Training minimizes mean binary cross-entropy with mini-batch
adaptive-moment updates (bias-corrected first and second moments).
Three epoch-level policies mirror the usual callback trio: keep the
parameter snapshot with the lowest validation loss, halve the learning
rate after a patience-long plateau, and stop early once improvement
stalls for longer. Feature standardization is fit on the train split
only and travels with the model.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EmptySplitError,
    MalformedModelError,
    SchemaMismatchError,
    TooFewSamplesError,
)
from .features import FeatureVector

PROB_CLAMP = 1e-7
STD_FLOOR = 1e-6

_MODEL_FIELDS = ("schema_id", "trained_epochs", "bias", "weights", "feat_mean", "feat_std")


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 100
    early_stop_patience: int = 10
    early_stop_min_delta: float = 1e-4
    plateau_patience: int = 5
    plateau_factor: float = 0.5
    min_lr: float = 1e-7
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.lr <= 0 or self.min_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.early_stop_patience < 1 or self.plateau_patience < 1:
            raise ValueError("patience values must be >= 1")
        if not 0.0 < self.plateau_factor < 1.0:
            raise ValueError("plateau_factor must lie in (0, 1)")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("momentum decay rates must lie in [0, 1)")


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    val_accuracy: float
    lr: float


@dataclass(frozen=True)
class TrainHistory:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0


@dataclass(frozen=True)
class LinearModel:
    """Trained classifier plus the standardization baked in at fit time."""

    schema_id: str
    weights: np.ndarray
    bias: float
    feat_mean: np.ndarray
    feat_std: np.ndarray
    trained_epochs: int

    def __post_init__(self) -> None:
        if not (len(self.weights) == len(self.feat_mean) == len(self.feat_std)):
            raise ValueError("weights, feat_mean and feat_std must share one length")
        if not np.all(self.feat_std > 0):
            raise ValueError("feat_std must be strictly positive")


def _sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    # evaluate the stable branch on each side to avoid overflow in exp
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_proba(model: LinearModel, x: FeatureVector) -> float:
    """P(fake) = sigmoid(w . (x - mean) / std + b)."""
    if x.schema_id != model.schema_id:
        raise SchemaMismatchError(f"model wants {model.schema_id!r}, got {x.schema_id!r}")
    z = _standardized_logit(
        model.weights.astype(np.float64),
        float(model.bias),
        model.feat_mean.astype(np.float64),
        model.feat_std.astype(np.float64),
        x.values.astype(np.float64),
    )
    return float(_sigmoid(z))


def _standardized_logit(w, b, mean, std, x) -> float:
    return float(w @ ((x - mean) / std) + b)


def bce_loss(p: float, y: int) -> float:
    """Binary cross-entropy with p clamped to [1e-7, 1 - 1e-7]."""
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    p = min(max(float(p), PROB_CLAMP), 1.0 - PROB_CLAMP)
    return -(y * np.log(p) + (1 - y) * np.log1p(-p))


def fit_standardizer(samples: list[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    """Per-dimension mean and population std (floored at 1e-6) as float32."""
    if len(samples) < 2:
        raise TooFewSamplesError(f"need at least 2 samples, got {len(samples)}")
    _require_uniform_schema(samples)
    x = np.stack([s.values for s in samples]).astype(np.float64)
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    return mean.astype(np.float32), std.astype(np.float32)


def _require_uniform_schema(samples: list[FeatureVector]) -> str:
    schema = samples[0].schema_id
    for s in samples:
        if s.schema_id != schema:
            raise SchemaMismatchError(f"mixed schemas {schema!r} and {s.schema_id!r}")
    return schema


def train(
    train_set: list[tuple[FeatureVector, int]],
    val_set: list[tuple[FeatureVector, int]],
    cfg: TrainConfig,
) -> tuple[LinearModel, TrainHistory]:
    """Fit a LinearModel; returns it with the best-validation snapshot.

    Each epoch shuffles the train split with a generator seeded by
    cfg.seed, walks it in batches of cfg.batch_size, then scores the
    validation split. Epoch-end bookkeeping, in order: checkpoint if
    val_loss hit a new strict minimum; stop if val_loss has not dropped
    by more than early_stop_min_delta for early_stop_patience epochs;
    otherwise after plateau_patience such epochs multiply the learning
    rate by plateau_factor (never below min_lr). Identical inputs and
    config give bitwise-identical results.
    """
    if not train_set or not val_set:
        raise EmptySplitError("train and val splits must both be non-empty")
    schema = _require_uniform_schema([x for x, _ in train_set] + [x for x, _ in val_set])
    mean32, std32 = fit_standardizer([x for x, _ in train_set])
    mean = mean32.astype(np.float64)
    std = std32.astype(np.float64)

    xtr = (np.stack([x.values for x, _ in train_set]).astype(np.float64) - mean) / std
    ytr = np.array([y for _, y in train_set], dtype=np.float64)
    xva = (np.stack([x.values for x, _ in val_set]).astype(np.float64) - mean) / std
    yva = np.array([y for _, y in val_set], dtype=np.float64)
    if not (np.all(np.isin(ytr, (0, 1))) and np.all(np.isin(yva, (0, 1)))):
        raise ValueError("labels must be 0 or 1")

    n, dim = xtr.shape
    w = np.zeros(dim)
    b = 0.0
    m_w = np.zeros(dim)
    v_w = np.zeros(dim)
    m_b = 0.0
    v_b = 0.0
    step = 0
    lr = cfg.lr
    rng = np.random.default_rng(cfg.seed)

    records: list[EpochRecord] = []
    best_val = np.inf
    best_snapshot = (np.zeros(dim, dtype=np.float32), np.float32(0.0), 0)
    stalled_stop = 0
    stalled_lr = 0
    reference_val = np.inf  # best seen, for the min_delta improvement test
    epochs_run = 0

    for epoch in range(1, cfg.max_epochs + 1):
        epochs_run = epoch
        order = rng.permutation(n)
        loss_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            xb = xtr[batch]
            yb = ytr[batch]
            p = _sigmoid(xb @ w + b)
            pc = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
            loss_sum += float(-(yb * np.log(pc) + (1.0 - yb) * np.log1p(-pc)).sum())
            g = (p - yb) / len(batch)
            grad_w = xb.T @ g
            grad_b = float(g.sum())
            step += 1
            m_w = cfg.beta1 * m_w + (1.0 - cfg.beta1) * grad_w
            v_w = cfg.beta2 * v_w + (1.0 - cfg.beta2) * grad_w**2
            m_b = cfg.beta1 * m_b + (1.0 - cfg.beta1) * grad_b
            v_b = cfg.beta2 * v_b + (1.0 - cfg.beta2) * grad_b**2
            c1 = 1.0 - cfg.beta1**step
            c2 = 1.0 - cfg.beta2**step
            w = w - lr * (m_w / c1) / (np.sqrt(v_w / c2) + cfg.eps)
            b = b - lr * (m_b / c1) / (np.sqrt(v_b / c2) + cfg.eps)

        # Validation runs on the float32 snapshot so history numbers match
        # exactly what the returned (or reloaded) model will reproduce.
        w32 = w.astype(np.float32)
        b32 = np.float32(b)
        pv = _sigmoid(xva @ w32.astype(np.float64) + float(b32))
        pvc = np.clip(pv, PROB_CLAMP, 1.0 - PROB_CLAMP)
        val_loss = float(-(yva * np.log(pvc) + (1.0 - yva) * np.log1p(-pvc)).mean())
        val_acc = float(((pv >= 0.5).astype(np.float64) == yva).mean())
        records.append(EpochRecord(epoch, loss_sum / n, val_loss, val_acc, lr))

        if val_loss < best_val:
            best_val = val_loss
            best_snapshot = (w32, b32, epoch)
        if val_loss < reference_val - cfg.early_stop_min_delta:
            reference_val = val_loss
            stalled_stop = 0
            stalled_lr = 0
        else:
            stalled_stop += 1
            stalled_lr += 1
        if stalled_stop >= cfg.early_stop_patience:
            break
        if stalled_lr >= cfg.plateau_patience:
            lr = max(lr * cfg.plateau_factor, cfg.min_lr)
            stalled_lr = 0

    best_w, best_b, best_epoch = best_snapshot
    model = LinearModel(
        schema_id=schema,
        weights=best_w,
        bias=float(best_b),
        feat_mean=mean32,
        feat_std=std32,
        trained_epochs=epochs_run,
    )
    return model, TrainHistory(records, best_epoch)


def gradient_check(
    x: FeatureVector, y: int, model: LinearModel, h: float = 1e-4
) -> float:
    """Max relative error of analytic BCE gradients vs central differences.

    Analytic: dL/dw_i = (p - y) * x~_i and dL/db = p - y on the
    standardized sample x~. Differences perturb each weight and the bias
    by +-h and re-evaluate the loss in double precision.
    """
    if x.schema_id != model.schema_id:
        raise SchemaMismatchError(f"model wants {model.schema_id!r}, got {x.schema_id!r}")
    w = model.weights.astype(np.float64)
    b = float(model.bias)
    xs = (x.values.astype(np.float64) - model.feat_mean.astype(np.float64)) / (
        model.feat_std.astype(np.float64)
    )

    def loss(wv: np.ndarray, bv: float) -> float:
        return bce_loss(float(_sigmoid(wv @ xs + bv)), y)

    p = float(_sigmoid(w @ xs + b))
    analytic = np.append((p - y) * xs, p - y)
    numeric = np.empty(len(w) + 1)
    for i in range(len(w)):
        wp = w.copy()
        wp[i] += h
        wm = w.copy()
        wm[i] -= h
        numeric[i] = (loss(wp, b) - loss(wm, b)) / (2.0 * h)
    numeric[-1] = (loss(w, b + h) - loss(w, b - h)) / (2.0 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float((np.abs(analytic - numeric) / denom).max())


def save_model(model: LinearModel, path: str | Path) -> None:
    """Serialize as key=value lines; floats use repr for exact round-trips."""
    def fmt(arr: np.ndarray) -> str:
        return ",".join(repr(float(v)) for v in arr)

    lines = [
        f"schema_id={model.schema_id}",
        f"trained_epochs={model.trained_epochs}",
        f"bias={repr(float(model.bias))}",
        f"weights={fmt(model.weights)}",
        f"feat_mean={fmt(model.feat_mean)}",
        f"feat_std={fmt(model.feat_std)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> LinearModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(str(path))
    fields: dict[str, str] = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise MalformedModelError(f"not a key=value line: {line!r}")
        fields[key] = value
    if tuple(sorted(fields)) != tuple(sorted(_MODEL_FIELDS)):
        raise MalformedModelError(
            f"expected fields {sorted(_MODEL_FIELDS)}, got {sorted(fields)}"
        )

    def parse(name: str) -> np.ndarray:
        try:
            return np.array([float(v) for v in fields[name].split(",")], dtype=np.float32)
        except ValueError as exc:
            raise MalformedModelError(f"bad {name}: {exc}") from exc

    try:
        model = LinearModel(
            schema_id=fields["schema_id"],
            weights=parse("weights"),
            bias=float(fields["bias"]),
            feat_mean=parse("feat_mean"),
            feat_std=parse("feat_std"),
            trained_epochs=int(fields["trained_epochs"]),
        )
    except ValueError as exc:
        raise MalformedModelError(str(exc)) from exc
    return model
