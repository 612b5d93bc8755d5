"""Fixed-topology prescriptor nets and their flat genome encoding.

The net maps 13 inputs (12 land fractions in canonical order plus scaled
area) through 16 tanh units to 8 softmax outputs, one per modifiable type;
the softmax is scaled by the cell's modifiable budget so the recommendation
always spends exactly that budget.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .land import MOD_IDX, MODIFIABLE_TYPES, N_MODIFIABLE, CellContext, Recommendation

N_INPUT = 13
N_HIDDEN = 16
N_OUTPUT = N_MODIFIABLE
SECDF_POS = MODIFIABLE_TYPES.index("secdf")
#: Genome layout: W1 row-major, b1, W2 row-major, b2.
GENOME_LENGTH = N_INPUT * N_HIDDEN + N_HIDDEN + N_HIDDEN * N_OUTPUT + N_OUTPUT

#: Hectare-scale areas would saturate tanh; the 13th input is area * AREA_SCALE.
AREA_SCALE = 1e-5

SEED_EPOCHS = 200
SEED_LEARNING_RATE = 1e-2


class SeedTrainingError(RuntimeError):
    """Backprop seed training missed its contract; carries the achieved value."""

    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass
class PrescriptorNet:
    w1: np.ndarray  # (13, 16)
    b1: np.ndarray  # (16,)
    w2: np.ndarray  # (16, 8)
    b2: np.ndarray  # (8,)
    area_scale: float = AREA_SCALE

    def __post_init__(self):
        shapes = (self.w1.shape, self.b1.shape, self.w2.shape, self.b2.shape)
        expected = ((N_INPUT, N_HIDDEN), (N_HIDDEN,), (N_HIDDEN, N_OUTPUT), (N_OUTPUT,))
        if shapes != expected:
            raise ValueError(f"bad prescriptor shapes {shapes}, expected {expected}")


def encode(net: PrescriptorNet) -> np.ndarray:
    return np.concatenate([net.w1.ravel(), net.b1, net.w2.ravel(), net.b2])


def decode(genome: np.ndarray, area_scale: float = AREA_SCALE) -> PrescriptorNet:
    genome = np.asarray(genome, dtype=np.float64)
    if genome.shape != (GENOME_LENGTH,):
        raise ValueError(f"genome must have length {GENOME_LENGTH}, got {genome.shape}")
    a = N_INPUT * N_HIDDEN
    b = a + N_HIDDEN
    c = b + N_HIDDEN * N_OUTPUT
    return PrescriptorNet(
        genome[:a].reshape(N_INPUT, N_HIDDEN).copy(),
        genome[a:b].copy(),
        genome[b:c].reshape(N_HIDDEN, N_OUTPUT).copy(),
        genome[c:].copy(),
        area_scale=area_scale,
    )


def _inputs(usage: np.ndarray, area: np.ndarray, area_scale: float) -> np.ndarray:
    return np.hstack([usage, (area * area_scale)[:, None]])


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def prescribe_batch(net: PrescriptorNet, usage: np.ndarray, area: np.ndarray) -> np.ndarray:
    """Recommendations for (n, 12) usage rows; returns (n, 8) target fractions."""
    x = _inputs(usage, np.asarray(area, dtype=np.float64), net.area_scale)
    h = np.tanh(x @ net.w1 + net.b1)
    probs = _softmax(h @ net.w2 + net.b2)
    budget = usage[:, MOD_IDX].sum(axis=1)
    return probs * budget[:, None]


def prescribe(net: PrescriptorNet, ctx: CellContext) -> Recommendation:
    rec = prescribe_batch(net, ctx.usage.fractions[None, :], np.array([ctx.area]))[0]
    return Recommendation(rec)


def orthogonal_matrix(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Random matrix with orthonormal rows or columns (whichever is smaller)."""
    transpose = rows < cols
    a = rng.normal(size=(cols, rows) if transpose else (rows, cols))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    return q.T if transpose else q


def random_net(rng: np.random.Generator, scale: float = 1.0) -> PrescriptorNet:
    """Orthogonally initialized net with zero biases."""
    return PrescriptorNet(
        w1=scale * orthogonal_matrix(rng, N_INPUT, N_HIDDEN),
        b1=np.zeros(N_HIDDEN),
        w2=scale * orthogonal_matrix(rng, N_HIDDEN, N_OUTPUT),
        b2=np.zeros(N_OUTPUT),
    )


def _mean_change(usage: np.ndarray, recs: np.ndarray) -> float:
    land_total = usage.sum(axis=1)
    gained = np.maximum(recs - usage[:, MOD_IDX], 0.0).sum(axis=1)
    change = np.zeros(len(usage))
    ok = land_total > 0
    change[ok] = 100.0 * gained[ok] / land_total[ok]
    return float(change.mean())


def _train_to_targets(usage: np.ndarray, area: np.ndarray, targets: np.ndarray,
                      epochs: int, lr: float, seed: int) -> PrescriptorNet:
    """Full-batch cross-entropy backprop toward per-cell output distributions."""
    rng = np.random.default_rng(seed)
    net = random_net(rng)
    x = _inputs(usage, np.asarray(area, dtype=np.float64), net.area_scale)
    n = len(x)
    vel = [np.zeros_like(net.w1), np.zeros_like(net.b1), np.zeros_like(net.w2), np.zeros_like(net.b2)]
    momentum = 0.9
    for _ in range(epochs):
        h = np.tanh(x @ net.w1 + net.b1)
        probs = _softmax(h @ net.w2 + net.b2)
        dlogits = (probs - targets) / n
        gw2 = h.T @ dlogits
        gb2 = dlogits.sum(axis=0)
        dh = dlogits @ net.w2.T * (1.0 - h * h)
        gw1 = x.T @ dh
        gb1 = dh.sum(axis=0)
        for buf, g, w in zip(vel, (gw1, gb1, gw2, gb2), (net.w1, net.b1, net.w2, net.b2)):
            buf *= momentum
            buf -= lr * g
            w += buf
    return net


def train_seed_nochange(usage: np.ndarray, area: np.ndarray,
                        epochs: int = SEED_EPOCHS, lr: float = SEED_LEARNING_RATE,
                        seed: int = 0, threshold: float = 1.0) -> PrescriptorNet:
    """Backprop a net that reproduces each cell's current modifiable mix.

    Contract: mean change over the training sample below ``threshold``
    percent; raises SeedTrainingError (carrying the achieved mean) otherwise.
    """
    budget = usage[:, MOD_IDX].sum(axis=1)
    if not np.all(budget > 0):
        raise ValueError("seed training requires cells with positive modifiable budget")
    targets = usage[:, MOD_IDX] / budget[:, None]
    net = _train_to_targets(usage, area, targets, epochs, lr, seed)
    achieved = _mean_change(usage, prescribe_batch(net, usage, area))
    if achieved >= threshold:
        raise SeedTrainingError(
            f"no-change seed reached mean change {achieved:.3f}% (target < {threshold}%)",
            achieved,
        )
    return net


def train_seed_maxsecdf(usage: np.ndarray, area: np.ndarray,
                        epochs: int = SEED_EPOCHS, lr: float = SEED_LEARNING_RATE,
                        seed: int = 0, threshold: float = 0.99) -> PrescriptorNet:
    """Backprop a net that pushes the whole modifiable budget into secdf."""
    budget = usage[:, MOD_IDX].sum(axis=1)
    if not np.all(budget > 0):
        raise ValueError("seed training requires cells with positive modifiable budget")
    targets = np.zeros((len(usage), N_OUTPUT))
    targets[:, SECDF_POS] = 1.0
    net = _train_to_targets(usage, area, targets, epochs, lr, seed)
    recs = prescribe_batch(net, usage, area)
    achieved = float((recs[:, SECDF_POS] / budget).mean())
    if achieved <= threshold:
        raise SeedTrainingError(
            f"max-secdf seed reached mean secdf share {achieved:.4f} (target > {threshold})",
            achieved,
        )
    return net


def save_prescriptor(net: PrescriptorNet, path, metadata: dict | None = None) -> None:
    doc = {
        "genome": encode(net).tolist(),
        "area_scale": net.area_scale,
        "metadata": dict(metadata or {}),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_prescriptor(path) -> tuple[PrescriptorNet, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    net = decode(np.array(doc["genome"]), area_scale=doc.get("area_scale", AREA_SCALE))
    return net, doc.get("metadata", {})
