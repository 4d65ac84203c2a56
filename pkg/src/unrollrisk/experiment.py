"""Training harness: fit R (and optionally the stepsize) through the unrolled solver.

The empirical risk (1/m) * sum_i 0.5*||z_N(x_i) - y_i||^2 is minimized by
an adaptive-moment gradient method; gradients are reverse-accumulated
through the N unrolled gradient-descent iterations, and through the
softplus reparameterization when the stepsize is learned. Frames come from
a signal file (non-overlapping windows) or from the synthetic sampler.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .estimators import softplus
from .model import ModelParams, make_rng, sample_batch

MODE_FIXED = "fixed"
MODE_LEARNED = "learned"

DEFAULT_OMEGA = softplus(-2.0)  # the fixed stepsize used in the depth sweeps

SWEEP_HEADER = "N,mode,k,n,omega_final,mse_train,mse_heldout,seed"


@dataclass(frozen=True)
class TrainConfig:
    """Shapes, stepsize mode, and optimizer budget for one training run."""

    n: int
    k: int
    depth: int
    mode: str = MODE_FIXED
    omega: float = DEFAULT_OMEGA
    omega_raw_init: float = -2.0
    learning_rate: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    steps: int = 2000
    batch_size: int | None = None
    seed: int = 0
    init_scale: float = 1.0

    def __post_init__(self):
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.mode not in (MODE_FIXED, MODE_LEARNED):
            raise ValueError(f"mode must be 'fixed' or 'learned', got {self.mode!r}")
        if self.steps < 1:
            raise ValueError("need at least one optimizer step")


@dataclass(frozen=True)
class FrameDataset:
    """Clean ground-truth frames plus the noise level to corrupt them with."""

    frames: np.ndarray
    source: str
    noise_sigma: float


@dataclass(frozen=True)
class TrainResult:
    regularizer: np.ndarray
    omega: float
    loss_trace: np.ndarray
    mse_train: float
    mse_heldout: float
    se_heldout: float
    seed: int


def synthetic_frames(params: ModelParams, m: int, seed: int) -> FrameDataset:
    """Frames drawn from the synthetic signal model (clean rows of a batch)."""
    batch = sample_batch(params, m, seed)
    return FrameDataset(frames=batch.clean, source=f"synthetic:{params.kind}",
                        noise_sigma=math.sqrt(params.sigma2))


def ingest_frames(path, n: int, limit: int | None = None, *, noise_sigma: float = 0.1) -> FrameDataset:
    """Cut a signal file into non-overlapping length-n frames.

    The file holds one float per line (.csv/.txt) or raw little-endian
    float64 otherwise. The whole signal is normalized to unit max-abs
    before windowing. Deterministic; no resampling or decoding.
    """
    path = Path(path)
    if path.suffix.lower() in (".csv", ".txt"):
        try:
            samples = np.loadtxt(path, dtype=float).ravel()
        except ValueError as exc:
            raise ValueError(f"malformed signal file {path}: {exc}") from exc
    else:
        samples = np.fromfile(path, dtype="<f8")
    if samples.size < n:
        raise ValueError(f"{path} holds {samples.size} samples, need at least {n}")
    peak = float(np.max(np.abs(samples)))
    if peak > 0:
        samples = samples / peak
    count = samples.size // n
    if limit is not None:
        count = min(count, limit)
    frames = samples[: count * n].reshape(count, n)
    return FrameDataset(frames=frames, source=f"file:{path}", noise_sigma=noise_sigma)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def unrolled_loss_and_grads(r: np.ndarray, omega: float, depth: int,
                            x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Empirical unrolled risk with reverse-accumulated gradients.

    Returns (loss, dloss/dR, dloss/domega) for
    loss = (1/m) * sum_i 0.5*||z_N(x_i) - y_i||^2, where z is iterated as
    z <- z*W + omega*x (rows are samples) with W = I - omega*(I + R^T R).
    """
    m, n = x.shape
    s = r.T @ r
    w = np.eye(n) - omega * (np.eye(n) + s)
    iterates = [np.zeros_like(x)]
    for _ in range(depth):
        iterates.append(iterates[-1] @ w + omega * x)
    diff = iterates[-1] - y
    loss = 0.5 * float(np.sum(diff * diff)) / m

    g = diff / m
    g_w = np.zeros((n, n))
    grad_omega_direct = 0.0
    for z_prev in reversed(iterates[:-1]):
        g_w += z_prev.T @ g
        grad_omega_direct += float(np.sum(g * x))
        g = g @ w.T
    grad_s = -omega * g_w
    grad_r = r @ (grad_s + grad_s.T)
    grad_omega = grad_omega_direct - float(np.sum(g_w * (np.eye(n) + s)))
    return loss, grad_r, grad_omega


def _empirical_risk(r: np.ndarray, omega: float, depth: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    s = r.T @ r
    w = np.eye(n) - omega * (np.eye(n) + s)
    z = np.zeros_like(x)
    for _ in range(depth):
        z = z @ w + omega * x
    return 0.5 * np.sum((z - y) ** 2, axis=1)


def stats_loss_and_grads(r: np.ndarray, omega: float, depth: int, sxx: np.ndarray,
                         sxy: np.ndarray, syy: float) -> tuple[float, np.ndarray, float]:
    """Full-batch loss/gradients from data second moments only.

    The unrolled map is linear, so the batch loss is an exact function of
    sxx = X^T X / m, sxy = X^T Y / m and syy = mean ||y||^2; the reverse
    sweep then runs over n x n iterates instead of the whole batch.
    Matches unrolled_loss_and_grads on full batches.
    """
    n = sxx.shape[0]
    s = r.T @ r
    w = np.eye(n) - omega * (np.eye(n) + s)
    iterates = [np.zeros((n, n))]
    for _ in range(depth):
        iterates.append(iterates[-1] @ w + omega * np.eye(n))
    t = iterates[-1]
    loss = 0.5 * (float(np.sum(t * (sxx @ t))) - 2.0 * float(np.sum(t * sxy)) + syy)

    g = sxx @ t - sxy
    g_w = np.zeros((n, n))
    grad_omega = 0.0
    for t_prev in reversed(iterates[:-1]):
        g_w += t_prev.T @ g
        grad_omega += float(np.trace(g))
        g = g @ w.T
    grad_s = -omega * g_w
    grad_r = r @ (grad_s + grad_s.T)
    grad_omega -= float(np.sum(g_w * (np.eye(n) + s)))
    return loss, grad_r, grad_omega


def train(cfg: TrainConfig, data: FrameDataset) -> TrainResult:
    """Fit the regularizer (and optionally the stepsize) on noisy frames.

    The last 20% of frames are held out before any optimization. Noise is
    drawn once per run from the config seed, so identical (cfg, data) give
    identical results. Aborts with a diagnostic if the loss diverges.
    """
    frames = np.asarray(data.frames, dtype=float)
    if frames.size == 0:
        raise ValueError("dataset is empty")
    m, n = frames.shape
    if n != cfg.n:
        raise ValueError(f"frames have length {n}, config says n={cfg.n}")
    held = m // 5
    train_clean = frames[: m - held]
    held_clean = frames[m - held:] if held else train_clean

    rng = make_rng(cfg.seed)
    r = rng.normal(0.0, 1.0, size=(cfg.k, cfg.n)) * (cfg.init_scale / math.sqrt(cfg.n))
    train_x = train_clean + rng.normal(0.0, data.noise_sigma, size=train_clean.shape)
    held_x = held_clean + rng.normal(0.0, data.noise_sigma, size=held_clean.shape)

    learned = cfg.mode == MODE_LEARNED
    omega_raw = cfg.omega_raw_init
    omega = softplus(omega_raw) if learned else cfg.omega

    beta1, beta2 = cfg.betas
    eps = 1e-8
    m1_r = np.zeros_like(r)
    m2_r = np.zeros_like(r)
    m1_w = 0.0
    m2_w = 0.0

    n_train = train_x.shape[0]
    batch = cfg.batch_size if cfg.batch_size and cfg.batch_size < n_train else n_train
    offset = 0
    if batch == n_train:
        sxx = train_x.T @ train_x / n_train
        sxy = train_x.T @ train_clean / n_train
        syy = float(np.sum(train_clean * train_clean)) / n_train

    trace = np.empty(cfg.steps)
    for step in range(cfg.steps):
        if batch == n_train:
            loss, grad_r, grad_omega = stats_loss_and_grads(r, omega, cfg.depth, sxx, sxy, syy)
        else:
            idx = (offset + np.arange(batch)) % n_train
            offset = (offset + batch) % n_train
            loss, grad_r, grad_omega = unrolled_loss_and_grads(
                r, omega, cfg.depth, train_x[idx], train_clean[idx])
        if not math.isfinite(loss):
            raise RuntimeError(
                f"training diverged at step {step}: loss={loss}, omega={omega}, "
                f"max|R|={np.max(np.abs(r))}"
            )
        trace[step] = loss
        t = step + 1
        m1_r = beta1 * m1_r + (1 - beta1) * grad_r
        m2_r = beta2 * m2_r + (1 - beta2) * grad_r**2
        r = r - cfg.learning_rate * (m1_r / (1 - beta1**t)) / (np.sqrt(m2_r / (1 - beta2**t)) + eps)
        if learned:
            grad_raw = grad_omega * _sigmoid(omega_raw)
            m1_w = beta1 * m1_w + (1 - beta1) * grad_raw
            m2_w = beta2 * m2_w + (1 - beta2) * grad_raw**2
            omega_raw -= cfg.learning_rate * (m1_w / (1 - beta1**t)) / (math.sqrt(m2_w / (1 - beta2**t)) + eps)
            omega = softplus(omega_raw)

    mse_train = float(np.mean(_empirical_risk(r, omega, cfg.depth, train_x, train_clean)))
    held_losses = _empirical_risk(r, omega, cfg.depth, held_x, held_clean)
    mse_held = float(np.mean(held_losses))
    se_held = float(np.std(held_losses, ddof=1) / math.sqrt(held_losses.size)) if held_losses.size > 1 else 0.0
    return TrainResult(regularizer=r, omega=omega, loss_trace=trace,
                       mse_train=mse_train, mse_heldout=mse_held,
                       se_heldout=se_held, seed=cfg.seed)


def sweep_depth(cfg: TrainConfig, data: FrameDataset, depths) -> list[dict]:
    """Train at every depth in both stepsize modes; one row per (depth, mode)."""
    rows = []
    for depth in depths:
        for mode in (MODE_FIXED, MODE_LEARNED):
            run_cfg = TrainConfig(
                n=cfg.n, k=cfg.k, depth=int(depth), mode=mode, omega=cfg.omega,
                omega_raw_init=cfg.omega_raw_init, learning_rate=cfg.learning_rate,
                betas=cfg.betas, steps=cfg.steps, batch_size=cfg.batch_size,
                seed=cfg.seed, init_scale=cfg.init_scale,
            )
            result = train(run_cfg, data)
            rows.append({
                "N": int(depth), "mode": mode, "k": cfg.k, "n": cfg.n,
                "omega_final": result.omega, "mse_train": result.mse_train,
                "mse_heldout": result.mse_heldout, "seed": cfg.seed,
            })
    return rows


def depth_sweep_csv(rows: list[dict]) -> str:
    """Render sweep rows with shortest-round-trip float formatting."""
    out = io.StringIO()
    out.write(SWEEP_HEADER + "\n")
    for row in rows:
        out.write(",".join([
            str(row["N"]), row["mode"], str(row["k"]), str(row["n"]),
            repr(float(row["omega_final"])), repr(float(row["mse_train"])),
            repr(float(row["mse_heldout"])), str(row["seed"]),
        ]) + "\n")
    return out.getvalue()


def theory_depth_curve(n: int, k: int, omega: float, mu2: float, theta2: float,
                       sigma2: float, depths) -> np.ndarray:
    """Best fixed-stepsize risk as a function of depth (the overlay curve).

    (mu^2+theta^2)/2 * n * (1-omega)^(2N) + sigma^2/2 * (n-k) * (1-(1-omega)^N)^2,
    evaluated for each depth; U-shaped in N for k < n, monotone for k = n.
    """
    depth_arr = np.asarray(depths, dtype=float)
    q = 1.0 - omega
    return (0.5 * (mu2 + theta2) * n * q ** (2 * depth_arr)
            + 0.5 * sigma2 * (n - k) * (1.0 - q**depth_arr) ** 2)
