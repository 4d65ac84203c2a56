"""Parameter-grid sweeps producing plot-ready tables.

A sweep crosses lists of (kind, n, mu, theta, sigma, k, N, omega) and
evaluates one quantity per cell. Cells are pure, so they may run on a
thread pool; rows are emitted in lexicographic grid order regardless of
completion order, and floats are formatted with their shortest round-trip
representation so outputs are byte-reproducible.
"""

from __future__ import annotations

import io
import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import KIND_CONST, KIND_IID, ModelParams, make_rng
from .optimal import best_linear, bilevel_optimal, optimal_omega, unrolling_optimal
from .risk import RiskValue, mc_risk, risk_ratio, true_risk

QUANTITIES = ("best-linear", "bilevel", "unrolling", "optimal-omega", "risk-ratio", "mc-check")
RATIO_SIDES = ("linear", "bilevel", "unrolling", "unrolling-optw")
MAX_CELLS = 1_000_000

AXIS_COLUMNS = ("kind", "n", "mu", "theta", "sigma", "k", "N", "omega")

QUANTITY_COLUMNS = {
    "best-linear": ("risk", "branch"),
    "bilevel": ("risk", "attained", "branch"),
    "unrolling": ("risk", "branch"),
    "optimal-omega": ("risk", "omega_lo", "omega_hi", "interval", "method"),
    "risk-ratio": ("numerator", "denominator", "ratio"),
    "mc-check": ("closed", "mc_mean", "mc_se", "abs_dev", "within_3se"),
}


@dataclass(frozen=True)
class SweepSpec:
    """A cross-product grid plus the quantity to evaluate on each cell."""

    quantity: str
    kinds: tuple = (KIND_CONST,)
    ns: tuple = (4,)
    mus: tuple = (1.0,)
    thetas: tuple = (0.5,)
    sigmas: tuple = (1.0,)
    ks: tuple = (1,)
    depths: tuple = (2,)
    omegas: tuple = (1.0,)
    ratio: str | None = None
    mc_samples: int = 20_000
    seed: int = 0

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"quantity must be one of {QUANTITIES}, got {self.quantity!r}")
        if self.quantity == "risk-ratio":
            sides = (self.ratio or "").split("/")
            if len(sides) != 2 or any(s not in RATIO_SIDES for s in sides):
                raise ValueError(
                    f"risk-ratio needs --ratio NUM/DEN with sides in {RATIO_SIDES}, got {self.ratio!r}")
        for kind in self.kinds:
            if kind not in (KIND_CONST, KIND_IID):
                raise ValueError(f"unknown model kind {kind!r}")

    def cell_count(self) -> int:
        return (len(self.kinds) * len(self.ns) * len(self.mus) * len(self.thetas)
                * len(self.sigmas) * len(self.ks) * len(self.depths) * len(self.omegas))

    def cells(self):
        """Lexicographic iteration over the grid axes."""
        return itertools.product(self.kinds, self.ns, self.mus, self.thetas,
                                 self.sigmas, self.ks, self.depths, self.omegas)


def _side_risk(side: str, params: ModelParams, k: int, depth: int, omega: float) -> RiskValue:
    if side == "linear":
        return RiskValue(best_linear(params).risk, params.kind)
    if side == "bilevel":
        return RiskValue(bilevel_optimal(params, k).risk, params.kind)
    if side == "unrolling":
        return RiskValue(unrolling_optimal(params, k, depth, omega).risk, params.kind)
    return RiskValue(optimal_omega(params, k, depth).risk, params.kind)


def _evaluate_cell(spec: SweepSpec, index: int, cell) -> dict:
    kind, n, mu, theta, sigma, k, depth, omega = cell
    params = ModelParams(n=int(n), mu=float(mu), theta2=float(theta) ** 2,
                         sigma2=float(sigma) ** 2, kind=kind)
    row = dict(zip(AXIS_COLUMNS, (kind, int(n), float(mu), float(theta),
                                  float(sigma), int(k), int(depth), float(omega))))
    q = spec.quantity
    if q == "best-linear":
        report = best_linear(params)
        row.update(risk=report.risk, branch=report.branch)
    elif q == "bilevel":
        report = bilevel_optimal(params, int(k))
        row.update(risk=report.risk, attained=report.attained, branch=report.branch)
    elif q == "unrolling":
        report = unrolling_optimal(params, int(k), int(depth), float(omega))
        row.update(risk=report.risk, branch=report.branch)
    elif q == "optimal-omega":
        report = optimal_omega(params, int(k), int(depth))
        row.update(risk=report.risk, omega_lo=report.omegas[0],
                   omega_hi=report.omegas[-1], interval=report.interval,
                   method=report.method)
    elif q == "risk-ratio":
        num_side, den_side = spec.ratio.split("/")
        num = _side_risk(num_side, params, int(k), int(depth), float(omega))
        den = _side_risk(den_side, params, int(k), int(depth), float(omega))
        row.update(numerator=num.value, denominator=den.value, ratio=risk_ratio(num, den))
    else:  # mc-check
        cell_seed = spec.seed * 1_000_003 + index
        rng = make_rng(cell_seed)
        t = rng.normal(0.0, 1.0, size=(params.n, params.n)) / params.n
        closed = true_risk(t, params).value
        est = mc_risk(t, params, spec.mc_samples, cell_seed)
        dev = abs(est.mean - closed)
        row.update(closed=closed, mc_mean=est.mean, mc_se=est.std_error,
                   abs_dev=dev, within_3se=int(dev <= 3.0 * est.std_error))
    return row


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[dict]:
    """Evaluate the grid; rows come back in deterministic grid order."""
    count = spec.cell_count()
    if count > MAX_CELLS:
        raise ValueError(f"grid has {count} cells, cap is {MAX_CELLS}")
    cells = list(spec.cells())
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(cells) < 2:
        return [_evaluate_cell(spec, i, cell) for i, cell in enumerate(cells)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ic: _evaluate_cell(spec, *ic), enumerate(cells)))


def _format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def rows_to_csv(rows: list[dict], quantity: str) -> str:
    """CSV text with the documented fixed header for the quantity."""
    header = AXIS_COLUMNS + QUANTITY_COLUMNS[quantity]
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_format_value(row[col]) for col in header) + "\n")
    return out.getvalue()


def rows_to_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=None, separators=(",", ":")) + "\n"
