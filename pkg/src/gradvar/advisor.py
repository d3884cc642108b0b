"""Tunneling-versus-thermal model and the variance-threshold decision rule.

Probabilities are normalized proxies: ``exp(-alpha / sigma)`` for
tunneling and ``exp(-delta_e / kT)`` for thermal activation.  The unknown
prefactors are set to 1 since only comparisons are consumed downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientData, InvalidArgument
from .landscape import LandscapeReport

QUANTUM_THRESHOLD = 0.3
CLASSICAL_THRESHOLD = 0.2
SIZE_CAVEAT = 5000

VERDICTS = ("quantum_recommended", "classical_recommended", "marginal")


@dataclass(frozen=True)
class WkbParams:
    alpha: float = 2.1
    kT: float = 1.0
    delta_e: float = 7.0

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.kT > 0 and self.delta_e > 0):
            raise InvalidArgument("alpha, kT and delta_e must all be positive")

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "kT": self.kT, "delta_e": self.delta_e}


def tunneling_probability(sigma: float, params: WkbParams | float = WkbParams()) -> float:
    """``exp(-alpha / sigma)``; ``params`` may be a bare ``alpha``."""
    alpha = params.alpha if isinstance(params, WkbParams) else float(params)
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    if alpha < 0:
        raise InvalidArgument("alpha must be non-negative")
    return math.exp(-alpha / sigma)


def thermal_probability(delta_e: float, kT: float) -> float:
    if not kT > 0:
        raise InvalidArgument("kT must be positive")
    if delta_e < 0:
        raise InvalidArgument("delta_e must be non-negative")
    return math.exp(-delta_e / kT)


def critical_sigma(params: WkbParams) -> float:
    """Variance scale ``alpha * kT / delta_e`` above which tunneling dominates."""
    return params.alpha * params.kT / params.delta_e


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points: list[tuple[float, float]]
    excluded: list[tuple[float, float]] = field(default_factory=list)

    @property
    def alpha(self) -> float:
        return -self.slope

    def predict(self, sigma: float) -> float:
        """Fitted success probability at ``sigma``."""
        if not sigma > 0:
            raise InvalidArgument("sigma must be positive")
        return math.exp(self.intercept + self.slope / sigma)

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "alpha": self.alpha,
            "r_squared": self.r_squared,
            "points": [list(p) for p in self.points],
            "excluded": [list(p) for p in self.excluded],
        }


def fit_wkb(points: Iterable[Sequence[float]]) -> FitResult:
    """Least-squares line through ``(1/sigma, log p)``.

    Points with ``p == 0`` are set aside in ``excluded``; a constant response
    reports ``R^2 = 0``.
    """
    used, excluded = [], []
    for sigma, p in points:
        sigma, p = float(sigma), float(p)
        if not sigma > 0 or p < 0 or p > 1 or math.isnan(p):
            raise InvalidArgument(f"invalid point (sigma={sigma}, p={p})")
        if p == 0:
            excluded.append((sigma, p))
        else:
            used.append((1.0 / sigma, math.log(p)))
    if len(used) < 3:
        raise InsufficientData(f"need at least 3 points with p > 0, got {len(used)}")
    x = np.array([u for u, _ in used])
    y = np.array([v for _, v in used])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise InsufficientData("all points share one sigma; slope is undefined")
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(yc @ yc)
    if ss_tot == 0:
        r2 = 0.0
    else:
        resid = y - (intercept + slope * x)
        r2 = min(1.0, max(0.0, 1.0 - float(resid @ resid) / ss_tot))
    return FitResult(slope, intercept, r2, used, excluded)


@dataclass(frozen=True)
class Recommendation:
    verdict: str
    sigma_measured: float
    threshold_used: tuple[float, float]
    rationale: str
    n: int | None = None
    caveats: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "sigma_measured": self.sigma_measured,
            "threshold_used": list(self.threshold_used),
            "rationale": self.rationale,
            "n": self.n,
            "caveats": list(self.caveats),
        }


def classify(sigma: float) -> str:
    if sigma >= QUANTUM_THRESHOLD:
        return "quantum_recommended"
    if sigma <= CLASSICAL_THRESHOLD:
        return "classical_recommended"
    return "marginal"


def recommend(report: LandscapeReport | float, n: int | None = None,
              size_growth: int = 0) -> Recommendation:
    """Verdict from the measured gradient deviation and problem size.

    Boundaries are closed: ``sigma >= 0.3`` favors quantum annealing and
    ``sigma <= 0.2`` favors classical heuristics.  ``size_growth`` is the
    number of variables a reformulation added, surfaced as a caveat.
    """
    sigma = report.sigma_grad if isinstance(report, LandscapeReport) else float(report)
    if math.isnan(sigma) or sigma < 0:
        raise InvalidArgument("sigma must be a non-negative number")
    verdict = classify(sigma)
    if verdict == "quantum_recommended":
        why = f"sigma={sigma:.4g} >= {QUANTUM_THRESHOLD}: rugged landscape, tunneling favored"
    elif verdict == "classical_recommended":
        why = f"sigma={sigma:.4g} <= {CLASSICAL_THRESHOLD}: smooth landscape, classical heuristics suffice"
    else:
        why = f"{CLASSICAL_THRESHOLD} < sigma={sigma:.4g} < {QUANTUM_THRESHOLD}: benchmark both"
    caveats = []
    if n is not None and n > SIZE_CAVEAT:
        caveats.append(f"n={n} exceeds {SIZE_CAVEAT} variables; consider a hybrid or decomposition approach")
    if size_growth > 0:
        caveats.append(f"reformulation added {size_growth} variable(s)")
    return Recommendation(verdict, sigma, (CLASSICAL_THRESHOLD, QUANTUM_THRESHOLD), why, n, tuple(caveats))


def render(rec: Recommendation, params: WkbParams | None = None) -> str:
    """One-screen text summary."""
    lines = [
        f"verdict        : {rec.verdict}",
        f"sigma_grad     : {rec.sigma_measured:.6g}",
        f"thresholds     : classical <= {rec.threshold_used[0]}, quantum >= {rec.threshold_used[1]}",
        f"rationale      : {rec.rationale}",
    ]
    if rec.n is not None:
        lines.append(f"n              : {rec.n}")
    if params is not None:
        crit = critical_sigma(params)
        lines.append(f"sigma_critical : {crit:.6g} (alpha={params.alpha}, kT={params.kT}, dE={params.delta_e})")
        if rec.sigma_measured > 0:
            lines.append(f"P_tunnel proxy : {tunneling_probability(rec.sigma_measured, params):.6g}")
        lines.append(f"P_thermal proxy: {thermal_probability(params.delta_e, params.kT):.6g}")
    for c in rec.caveats:
        lines.append(f"caveat         : {c}")
    return "\n".join(lines)
