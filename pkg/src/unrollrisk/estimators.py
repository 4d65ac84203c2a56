"""Regularizers, the lower-level solve, and both estimator families.

The lower-level denoising problem min_z 0.5*||z - x||^2 + 0.5*||R z||^2 has
the exact solution operator (I + R^T R)^{-1}; unrolling N steps of gradient
descent from zero instead yields (I + R^T R)^{-1}(I - (I - omega(I + R^T R))^N).
Both are materialized here as dense symmetric maps. The iterative path is
the one differentiated during training; the closed form is the analysis path.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .expressivity import transfer_f

_BIN_MAGIC = b"URL1"
# magic(4) + u16 k + u16 n + 4 reserved bytes = 12-byte header
_BIN_HEADER = struct.Struct("<4sHH4x")


def softplus(x: float) -> float:
    """log(1 + exp(x)), overflow-safe."""
    return math.log1p(math.exp(-abs(x))) + max(x, 0.0)


@dataclass(frozen=True)
class Regularizer:
    """A k x n penalty matrix; k > n is rejected (adds no expressivity)."""

    r: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.r, dtype=float))
        object.__setattr__(self, "r", arr)
        k, n = arr.shape
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")

    @property
    def k(self) -> int:
        return self.r.shape[0]

    @property
    def n(self) -> int:
        return self.r.shape[1]

    def gram(self) -> np.ndarray:
        return self.r.T @ self.r

    def save_csv(self, path) -> None:
        np.savetxt(path, self.r, delimiter=",")

    @classmethod
    def load_csv(cls, path) -> "Regularizer":
        return cls(np.loadtxt(path, delimiter=",", ndmin=2))

    def save_binary(self, path) -> None:
        """Raw little-endian float64, row-major, behind the 12-byte header."""
        with open(path, "wb") as fh:
            fh.write(_BIN_HEADER.pack(_BIN_MAGIC, self.k, self.n))
            fh.write(np.ascontiguousarray(self.r, dtype="<f8").tobytes())

    @classmethod
    def load_binary(cls, path) -> "Regularizer":
        with open(path, "rb") as fh:
            header = fh.read(_BIN_HEADER.size)
            if len(header) != _BIN_HEADER.size:
                raise ValueError("truncated regularizer file")
            magic, k, n = _BIN_HEADER.unpack(header)
            if magic != _BIN_MAGIC:
                raise ValueError(f"bad magic {magic!r}, expected {_BIN_MAGIC!r}")
            data = np.frombuffer(fh.read(), dtype="<f8")
        if data.size != k * n:
            raise ValueError(f"expected {k * n} values, found {data.size}")
        return cls(data.reshape(k, n).astype(float))


@dataclass(frozen=True)
class UnrollConfig:
    """Depth and stepsize of unrolled gradient descent.

    When omega_raw is given, omega is derived as softplus(omega_raw), which
    keeps the stepsize positive while training an unconstrained parameter.
    """

    depth: int
    omega: float | None = None
    omega_raw: float | None = None

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.omega_raw is not None:
            object.__setattr__(self, "omega", softplus(self.omega_raw))
        if self.omega is None:
            raise ValueError("one of omega, omega_raw is required")
        if self.omega <= 0:
            raise ValueError(f"omega must be > 0, got {self.omega}")


@dataclass
class LinearEstimator:
    """A dense n x n linear map with a lazily cached eigendecomposition."""

    t: np.ndarray
    _eigen: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.t = np.atleast_2d(np.asarray(self.t, dtype=float))
        if self.t.shape[0] != self.t.shape[1]:
            raise ValueError(f"estimator must be square, got {self.t.shape}")

    @property
    def n(self) -> int:
        return self.t.shape[0]

    def eigen(self) -> tuple[np.ndarray, np.ndarray]:
        """(eigenvalues descending, eigenvector columns) of the symmetrized map."""
        if self._eigen is None:
            w, v = np.linalg.eigh(0.5 * (self.t + self.t.T))
            order = np.argsort(w)[::-1]
            self._eigen = (w[order], v[:, order])
        return self._eigen

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.t @ np.asarray(x, dtype=float)


def solve_lower_level(reg: Regularizer, x: np.ndarray) -> np.ndarray:
    """Exact minimizer of the lower-level problem: (I + R^T R)^{-1} x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (reg.n,):
        raise ValueError(f"expected vector of length {reg.n}, got shape {x.shape}")
    system = np.eye(reg.n) + reg.gram()
    return cho_solve(cho_factor(system), x)


def unroll_gd_iterative(reg: Regularizer, cfg: UnrollConfig, x: np.ndarray) -> np.ndarray:
    """The literal N-step gradient-descent iterate from z = 0."""
    x = np.asarray(x, dtype=float)
    if x.shape != (reg.n,):
        raise ValueError(f"expected vector of length {reg.n}, got shape {x.shape}")
    z = np.zeros(reg.n)
    for _ in range(cfg.depth):
        grad = (z - x) + reg.r.T @ (reg.r @ z)
        z = z - cfg.omega * grad
    return z


def _spectral_map(reg: Regularizer, eigenvalue_fn) -> LinearEstimator:
    lam, v = np.linalg.eigh(reg.gram())
    t = (v * eigenvalue_fn(np.maximum(lam, 0.0))) @ v.T
    return LinearEstimator(0.5 * (t + t.T))


def unroll_estimator(reg: Regularizer, cfg: UnrollConfig) -> LinearEstimator:
    """Closed form of the N-step unrolled map, built on the Gram spectrum.

    Matrix powers go through the eigendecomposition of R^T R, which stays
    stable for large depth where repeated multiplication would not.
    """
    return _spectral_map(reg, lambda s: transfer_f(s, cfg.depth, cfg.omega))


def bilevel_estimator(reg: Regularizer) -> LinearEstimator:
    """Exact solution operator (I + R^T R)^{-1}; SPD with eigenvalues in (0, 1]."""
    return _spectral_map(reg, lambda s: 1.0 / (1.0 + s))
