"""Exact t-SNE embedding of per-image feature vectors.

The optimizer is plain O(N^2) gradient descent with early exaggeration,
a two-stage momentum schedule and per-coordinate adaptive gains.  Rows are
processed in sorted ``image_id`` order and each point's initial position is
derived from ``(seed, image_id)``, so the id -> coordinate mapping does not
depend on the order of rows in the input.
"""
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .dataset import FeatureMatrix

log = logging.getLogger(__name__)

PROB_FLOOR = 1e-12


class TsneError(RuntimeError):
    pass


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 50.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    learning_rate: float = 200.0
    initial_momentum: float = 0.5
    final_momentum: float = 0.8
    min_gain: float = 0.01
    init_scale: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.perplexity > 0:
            raise ValueError(f"perplexity must be positive, got {self.perplexity}")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")


class Embedding(NamedTuple):
    ids: Tuple[str, ...]
    coords: np.ndarray


class TsneResult(NamedTuple):
    embedding: Embedding
    affinities: np.ndarray
    initial_kl: float
    final_kl: float
    kl_history: List[Tuple[int, float]]


def _entropy_bits(probs: np.ndarray) -> float:
    nz = probs[probs > 0]
    return float(-np.sum(nz * np.log2(nz)))


def conditional_affinities(sq_distances_row, perplexity: float, tol: float = 1e-5,
                           max_iter: int = 200) -> Tuple[float, np.ndarray]:
    """Gaussian neighbor probabilities for one point.

    Bisects the precision ``beta = 1 / (2 sigma^2)`` until ``2**H`` matches
    ``perplexity`` within ``tol``.  Returns ``(sigma, probs)``.  A target
    above the number of neighbors is clamped to it.
    """
    d = np.asarray(sq_distances_row, dtype=np.float64)
    m = d.size
    if m < 1:
        raise TsneError("need at least one neighbor")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise TsneError("squared distances must be finite and non-negative")
    if m == 1:
        return math.inf, np.ones(1)
    target = min(float(perplexity), float(m))
    # shifting by the minimum leaves the normalized probabilities unchanged
    d = d - d.min()

    def probs_at(beta):
        w = np.exp(-d * beta)
        return w / w.sum()

    lo, hi = 0.0, math.inf
    beta = 1.0 / max(float(np.mean(d)), 1e-300)
    probs = probs_at(0.0)
    if abs(2.0 ** _entropy_bits(probs) - target) <= tol:
        return math.inf, probs
    if not np.any(d > 0):
        raise TsneError(f"all neighbor distances are equal; perplexity {target} is unreachable "
                        f"(only {m} is attainable)")
    for _ in range(max_iter):
        probs = probs_at(beta)
        perp = 2.0 ** _entropy_bits(probs)
        if abs(perp - target) <= tol:
            return math.sqrt(0.5 / beta), probs
        if perp > target:
            lo = beta
            beta = beta * 2.0 if math.isinf(hi) else 0.5 * (lo + hi)
        else:
            hi = beta
            beta = 0.5 * (lo + hi)
    raise TsneError(f"bandwidth search did not reach perplexity {target} within {max_iter} iterations "
                    f"(last {perp:.6g}); distances may be degenerate")


def squared_distances(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    sq = np.sum(x * x, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def conditional_matrix(x: np.ndarray, perplexity: float) -> np.ndarray:
    """Row-stochastic matrix of ``p_{j|i}`` with zero diagonal."""
    d = squared_distances(x)
    n = d.shape[0]
    p = np.zeros((n, n))
    for i in range(n):
        others = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        _, probs = conditional_affinities(d[i, others], perplexity)
        p[i, others] = probs
    return p


def symmetrize(conditional) -> np.ndarray:
    """Joint affinities ``P_ij = (p_{j|i} + p_{i|j}) / (2N)``."""
    c = np.asarray(conditional, dtype=np.float64)
    n = c.shape[0]
    if c.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {c.shape}")
    return (c + c.T) / (2.0 * n)


def student_t_affinities(y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return normalized ``Q`` and the unnormalized kernel ``1 / (1 + |y_i - y_j|^2)``."""
    kernel = 1.0 / (1.0 + squared_distances(y))
    np.fill_diagonal(kernel, 0.0)
    return kernel / kernel.sum(), kernel


def kl_divergence(p: np.ndarray, embedding) -> float:
    """KL(P || Q) over off-diagonal pairs; zero ``P`` entries contribute nothing."""
    y = embedding.coords if isinstance(embedding, Embedding) else np.asarray(embedding, dtype=np.float64)
    q, _ = student_t_affinities(y)
    p = np.asarray(p, dtype=np.float64)
    mask = p > 0
    np.fill_diagonal(mask, False)
    pm = np.maximum(p[mask], PROB_FLOOR)
    qm = np.maximum(q[mask], PROB_FLOOR)
    return max(0.0, float(np.sum(p[mask] * np.log(pm / qm))))


def initial_position(image_id: str, seed: int, scale: float = 1e-4) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}\x00{image_id}".encode()).digest()
    rng = np.random.Generator(np.random.PCG64(int.from_bytes(digest[:16], "little")))
    return scale * rng.standard_normal(2)


def _gradient(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    q, kernel = student_t_affinities(y)
    w = (p - q) * kernel
    return 4.0 * (np.sum(w, axis=1)[:, None] * y - w @ y)


def run_tsne_detailed(features: FeatureMatrix, config: TsneConfig = TsneConfig(),
                      log_every: int = 0) -> TsneResult:
    n = len(features.ids)
    if n < 2:
        raise TsneError("t-SNE needs at least two points")
    if not config.perplexity < n:
        raise TsneError(f"perplexity {config.perplexity} must be below the number of points {n}")
    order = sorted(range(n), key=lambda i: features.ids[i])
    ids = tuple(features.ids[i] for i in order)
    x = features.data[order]

    p = symmetrize(conditional_matrix(x, config.perplexity))
    y = np.stack([initial_position(i, config.seed, config.init_scale) for i in ids])
    initial_kl = kl_divergence(p, y)
    history = [(0, initial_kl)]

    update = np.zeros_like(y)
    gains = np.ones_like(y)
    for it in range(config.iterations):
        exaggerate = it < config.exaggeration_iters
        momentum = config.initial_momentum if exaggerate else config.final_momentum
        grad = _gradient(p * config.early_exaggeration if exaggerate else p, y)
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        np.maximum(gains, config.min_gain, out=gains)
        update = momentum * update - config.learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
        if not np.all(np.isfinite(y)):
            raise TsneError(f"non-finite embedding coordinates at iteration {it + 1}; "
                            f"max |grad| = {np.nanmax(np.abs(grad)):.3g}")
        if log_every and (it + 1) % log_every == 0:
            kl = kl_divergence(p, y)
            history.append((it + 1, kl))
            log.info("t-SNE iteration %d: KL = %.6f", it + 1, kl)
    final_kl = kl_divergence(p, y)
    if history[-1][0] != config.iterations:
        history.append((config.iterations, final_kl))
    return TsneResult(Embedding(ids, y), p, initial_kl, final_kl, history)


def run_tsne(features: FeatureMatrix, config: TsneConfig = TsneConfig()) -> Embedding:
    """Embed feature rows in 2-D; rows come back sorted by ``image_id``."""
    return run_tsne_detailed(features, config).embedding
