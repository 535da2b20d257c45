"""Diagonal-covariance Gaussian mixtures: seeded k-means start, EM, scoring.

All arithmetic is sequential per mixture component with numpy reductions in
a fixed order, so identical inputs and seed give bit-identical models.
Model files are plain text::

    GMM1
    <K>
    <dim>
    <K weights>
    <K lines of dim means>
    <K lines of dim variances>
    meta <n_frames> <final loglik> <seed> <n_iter>      (optional)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import DimMismatch, MalformedModelFile, TooFewFrames
from .features import FeatureMatrix

LOG_2PI = np.log(2.0 * np.pi)
KMEANS_ITERS = 10
MIN_FRAMES_PER_COMPONENT = 10


@dataclass(frozen=True)
class GmmMeta:
    n_frames: int = 0
    loglik: float = float("nan")
    seed: int = 0
    n_iter: int = 0


@dataclass(frozen=True, eq=False)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    meta: GmmMeta = GmmMeta()
    # per-frame log-likelihood before each M-step plus the final value;
    # training diagnostics only, not persisted
    history: tuple = field(default=(), compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        mu = np.array(self.means, dtype=np.float64)
        var = np.array(self.variances, dtype=np.float64)
        if mu.ndim != 2 or var.shape != mu.shape or w.shape != (mu.shape[0],):
            raise ValueError("inconsistent GMM parameter shapes")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be a probability vector")
        if np.any(var <= 0):
            raise ValueError("variances must be positive")
        for a in (w, mu, var):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "variances", var)

    @property
    def K(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def same_params(self, other: "GmmModel") -> bool:
        return (np.array_equal(self.weights, other.weights)
                and np.array_equal(self.means, other.means)
                and np.array_equal(self.variances, other.variances))


@dataclass(frozen=True)
class EmSettings:
    max_iters: int = 100
    rel_tol: float = 1e-5
    variance_floor_factor: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be > 0")


def _as_array(features) -> np.ndarray:
    x = features.rows if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return np.ascontiguousarray(x, dtype=np.float64)


def _check_frames(x: np.ndarray, K: int) -> None:
    if K < 1:
        raise ValueError("K must be >= 1")
    if x.shape[0] < MIN_FRAMES_PER_COMPONENT * K:
        raise TooFewFrames(f"{x.shape[0]} frames, need at least {MIN_FRAMES_PER_COMPONENT * K} for K={K}")


def _variance_floor(x: np.ndarray, factor: float) -> np.ndarray:
    floor = factor * x.var(axis=0)
    # constant dimensions (e.g. silence at the log floor) still need a positive floor
    return np.maximum(floor, np.finfo(np.float64).tiny * 1e10)


def _sq_dist(x: np.ndarray, c: np.ndarray) -> np.ndarray:
    d = x - c
    return np.einsum("ij,ij->i", d, d)


def _kmeans(x: np.ndarray, K: int, seed: int) -> np.ndarray:
    """Cluster labels after farthest-point seeding and ``KMEANS_ITERS`` Lloyd steps."""
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    centers = np.empty((K, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    nearest = _sq_dist(x, centers[0])
    for k in range(1, K):
        centers[k] = x[int(np.argmax(nearest))]
        nearest = np.minimum(nearest, _sq_dist(x, centers[k]))

    labels = np.zeros(n, dtype=np.intp)
    for _ in range(KMEANS_ITERS):
        dists = np.column_stack([_sq_dist(x, c) for c in centers])
        labels = np.argmin(dists, axis=1)
        for k in range(K):
            members = x[labels == k]
            if len(members):
                centers[k] = members.mean(axis=0)
    return labels


def init_model(features, K: int = 16, seed: int = 0, variance_floor_factor: float = 1e-3) -> GmmModel:
    x = _as_array(features)
    _check_frames(x, K)
    floor = _variance_floor(x, variance_floor_factor)
    labels = _kmeans(x, K, seed)
    weights = np.zeros(K)
    means = np.empty((K, x.shape[1]))
    variances = np.empty_like(means)
    for k in range(K):
        members = x[labels == k]
        if len(members) == 0:
            means[k] = x.mean(axis=0)
            variances[k] = np.maximum(x.var(axis=0), floor)
            continue
        weights[k] = len(members) / x.shape[0]
        means[k] = members.mean(axis=0)
        variances[k] = np.maximum(members.var(axis=0), floor)
    weights /= weights.sum()
    return GmmModel(weights, means, variances, GmmMeta(x.shape[0], float("nan"), seed, 0))


def _component_logpdf(x: np.ndarray, model: GmmModel) -> np.ndarray:
    """log w_k + log N(x; mu_k, var_k) for every frame and component, shape (n, K)."""
    out = np.empty((x.shape[0], model.K))
    with np.errstate(divide="ignore"):
        log_w = np.log(model.weights)
    for k in range(model.K):
        var = model.variances[k]
        d = x - model.means[k]
        maha = np.einsum("ij,j->i", d * d, 1.0 / var)
        out[:, k] = log_w[k] - 0.5 * (x.shape[1] * LOG_2PI + np.sum(np.log(var)) + maha)
    return out


def frame_log_likelihood(model: GmmModel, features) -> np.ndarray:
    x = _as_array(features)
    if x.shape[1] != model.dim:
        raise DimMismatch(f"features have {x.shape[1]} dims, model has {model.dim}")
    return logsumexp(_component_logpdf(x, model), axis=1)


def avg_log_likelihood(model: GmmModel, features) -> float:
    """Mean per-frame log-likelihood in nats."""
    ll = frame_log_likelihood(model, features)
    if ll.size == 0:
        raise ValueError("no frames to score")
    return float(np.mean(ll))


def _m_step(x: np.ndarray, resp: np.ndarray, model: GmmModel, floor: np.ndarray):
    nk = resp.sum(axis=0)
    weights = nk / x.shape[0]
    means = model.means.copy()
    variances = model.variances.copy()
    for k in range(model.K):
        if nk[k] <= 0:
            # dead component: keep its parameters, weight stays 0
            continue
        r = resp[:, k]
        means[k] = (r @ x) / nk[k]
        d = x - means[k]
        variances[k] = np.maximum((r @ (d * d)) / nk[k], floor)
    weights /= weights.sum()
    return weights, means, variances


def train_em(features, settings: EmSettings = EmSettings(), K: int = 16, callback=None) -> GmmModel:
    """Maximum-likelihood GMM by EM, stopping when the per-frame log-likelihood
    gains less than ``settings.rel_tol`` nats or after ``max_iters`` M-steps.

    ``callback(iteration, model)``, if given, sees the model after every M-step.
    """
    x = _as_array(features)
    model = init_model(x, K, settings.seed, settings.variance_floor_factor)
    floor = _variance_floor(x, settings.variance_floor_factor)
    history = []
    n_iter = 0
    while True:
        logp = _component_logpdf(x, model)
        norm = logsumexp(logp, axis=1)
        history.append(float(np.mean(norm)))
        if n_iter >= settings.max_iters:
            break
        if len(history) > 1 and history[-1] - history[-2] < settings.rel_tol:
            break
        resp = np.exp(logp - norm[:, None])
        model = GmmModel(*_m_step(x, resp, model, floor))
        n_iter += 1
        if callback is not None:
            callback(n_iter, model)
    meta = GmmMeta(x.shape[0], history[-1], settings.seed, n_iter)
    return GmmModel(model.weights, model.means, model.variances, meta, tuple(history))


# ---------------------------------------------------------------------------
# persistence


def _fmt(values) -> str:
    return " ".join("%.17g" % v for v in values)


def save_model(model: GmmModel, path) -> None:
    lines = ["GMM1", str(model.K), str(model.dim), _fmt(model.weights)]
    lines += [_fmt(row) for row in model.means]
    lines += [_fmt(row) for row in model.variances]
    m = model.meta
    lines.append(f"meta {m.n_frames} {'%.17g' % m.loglik} {m.seed} {m.n_iter}")
    Path(path).write_text("\n".join(lines) + "\n")


def _floats(line: str, n: int, what: str) -> list[float]:
    try:
        vals = [float(v) for v in line.split()]
    except ValueError as exc:
        raise MalformedModelFile(f"non-numeric {what}") from exc
    if len(vals) != n:
        raise MalformedModelFile(f"{what}: expected {n} values, found {len(vals)}")
    return vals


def load_model(path) -> GmmModel:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "GMM1":
        raise MalformedModelFile(f"{path}: missing GMM1 version line")
    try:
        K, dim = int(lines[1]), int(lines[2])
    except (IndexError, ValueError) as exc:
        raise MalformedModelFile(f"{path}: bad K/dim header") from exc
    if K < 1 or dim < 1:
        raise MalformedModelFile(f"{path}: K and dim must be positive")
    body = lines[3:]
    if len(body) < 1 + 2 * K:
        raise MalformedModelFile(f"{path}: truncated, expected {1 + 2 * K} parameter lines")
    weights = _floats(body[0], K, "weights")
    means = [_floats(body[1 + k], dim, f"mean {k}") for k in range(K)]
    variances = [_floats(body[1 + K + k], dim, f"variance {k}") for k in range(K)]
    meta = GmmMeta()
    rest = [ln for ln in body[1 + 2 * K:] if ln.strip()]
    if rest:
        parts = rest[0].split()
        if parts[0] != "meta" or len(parts) != 5:
            raise MalformedModelFile(f"{path}: unexpected trailing line {rest[0]!r}")
        try:
            meta = GmmMeta(int(parts[1]), float(parts[2]), int(parts[3]), int(parts[4]))
        except ValueError as exc:
            raise MalformedModelFile(f"{path}: bad meta line") from exc
    try:
        return GmmModel(np.array(weights), np.array(means), np.array(variances), meta)
    except ValueError as exc:
        raise MalformedModelFile(f"{path}: {exc}") from exc
