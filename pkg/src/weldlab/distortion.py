"""Integrability classification of sampled distortion fields.

The growth of K near the unit circle decides how the welding extension
classifies: K bounded by a power (r-1)^{-alpha} gives locally
p-integrable distortion for p < 1/alpha, logarithmic growth gives
locally exponentially integrable distortion.  Since any finite sample
integrates finitely, "integrable" is operationalized as a tail trend on
nested shrinking annuli compared against the closed-form model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .welding import PlaneMapField, welding_distortion

TWO_PI = 2.0 * math.pi

# Log2 slope dead-zone for the annulus-increment trend verdicts.
_TREND_MARGIN = 0.02


@dataclass
class DistortionProfile:
    """Shell maxima of K on radii decreasing toward the unit circle."""

    r_grid: np.ndarray
    k_max: np.ndarray

    def __post_init__(self):
        self.r_grid = np.asarray(self.r_grid, dtype=float)
        self.k_max = np.asarray(self.k_max, dtype=float)
        if np.any(self.r_grid <= 1.0):
            raise ValueError("profile radii must exceed 1")
        if np.any(np.diff(self.r_grid) >= 0.0):
            raise ValueError("r_grid must decrease toward 1")
        if np.any(self.k_max < 1.0 - 1e-9):
            raise ValueError("K values must be >= 1")


class ExponentFit(NamedTuple):
    alpha: float
    residual: float
    constant: bool


def radial_profile(F: PlaneMapField, radii, theta_samples: int = 512) -> DistortionProfile:
    """Max K per shell over a uniform theta grid containing theta = 0."""
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    thetas = np.linspace(0.0, TWO_PI, theta_samples, endpoint=False)
    k = [float(np.max(welding_distortion(F, r * np.exp(1j * thetas)))) for r in radii]
    return DistortionProfile(radii, np.array(k))


def fit_radial_exponent(profile: DistortionProfile) -> ExponentFit:
    """Least-squares slope of log K_max against log 1/(r-1).

    Requires at least 5 shells spanning two decades of r-1.  A constant
    profile short-circuits to alpha = 0 with the ``constant`` flag set.
    """
    s = profile.r_grid - 1.0
    if s.size < 5:
        raise ValueError("need at least 5 shells")
    if np.max(s) / np.min(s) < 99.0:
        raise ValueError("shells must span at least 2 decades of r-1")
    logk = np.log(profile.k_max)
    if np.ptp(logk) < 1e-9:
        return ExponentFit(0.0, 0.0, True)
    x = np.log(1.0 / s)
    coef, res = np.polyfit(x, logk, 1, full=True)[:2]
    resid = float(np.sqrt(res[0] / s.size)) if res.size else 0.0
    return ExponentFit(float(coef[0]), resid, False)


def nested_annuli(outer_gap: float = 2.0 ** -3, count: int = 8):
    """Annuli (r_lo, r_hi) with r-1 halving toward the unit circle."""
    return [
        (1.0 + outer_gap * 2.0 ** -(i + 1), 1.0 + outer_gap * 2.0 ** -i)
        for i in range(count)
    ]


def _annulus_integral(kval: Callable, transform: Callable, r_lo, r_hi,
                      theta_samples: int, radial_cells: int, mode: str) -> float:
    """Polar quadrature: midpoint in theta, geometric midpoint in r-1.

    ``pointwise`` integrates the field itself; ``shell_max`` integrates
    the shell envelope max_theta K(r e^{i theta}), the desk-scale
    surrogate of the radial distortion bound whose integrability
    threshold the classification refers to.
    """
    edges = 1.0 + np.geomspace(r_lo - 1.0, r_hi - 1.0, radial_cells + 1)
    # Cell centers are arithmetic so the midpoint rule integrates the
    # polar area weight r exactly; the cell edges stay geometric in r-1.
    rmid = 0.5 * (edges[:-1] + edges[1:])
    dr = np.diff(edges)
    if mode == "shell_max":
        thetas = np.linspace(0.0, TWO_PI, theta_samples, endpoint=False)
        rr, tt = np.meshgrid(rmid, thetas, indexing="ij")
        kmax = np.max(kval((rr * np.exp(1j * tt)).reshape(-1)).reshape(rr.shape), axis=1)
        return float(np.sum(transform(kmax) * rmid * dr) * TWO_PI)
    thetas = (np.arange(theta_samples) + 0.5) * TWO_PI / theta_samples
    dtheta = TWO_PI / theta_samples
    rr, tt = np.meshgrid(rmid, thetas, indexing="ij")
    z = rr * np.exp(1j * tt)
    vals = transform(kval(z.ravel())).reshape(z.shape)
    return float(np.sum(vals * rr * dr[:, None] * dtheta))


def _trend_verdict(increments: np.ndarray) -> tuple[str, float]:
    inc = np.asarray(increments, dtype=float)
    if np.any(~np.isfinite(inc)):
        return "divergent", math.inf
    if inc.size < 2:
        return "inconclusive", 0.0
    with np.errstate(divide="ignore"):
        slopes = np.log2(inc[1:] / inc[:-1])
    slope = float(np.mean(slopes))
    if slope <= -_TREND_MARGIN:
        return "convergent", slope
    if slope >= _TREND_MARGIN:
        return "divergent", slope
    return "inconclusive", slope


def integrability_report(
    field,
    p_list=(),
    lambda_list=(),
    annuli=None,
    theta_samples: int = 256,
    radial_cells: int = 6,
    alpha_model: float | None = None,
    mode: str | None = None,
) -> dict:
    """Tail-trend analysis of K^p and exp(lambda K) on nested annuli.

    ``field`` is a PlaneMapField or a callable K(z).  For welding fields
    the default mode integrates the shell envelope max_theta K (the
    radial bound whose threshold p < 1/alpha the classification quotes);
    callables default to the pointwise field.  Increments over the
    shrinking annuli are classified by the sign of the mean log2
    increment ratio with a +-0.02 dead-zone, and compared against the
    closed-form model int (r-1)^{-p*alpha} dr when ``alpha_model`` is
    given.  Divergence is a report outcome, not an error.
    """
    if annuli is None:
        annuli = nested_annuli()
    if isinstance(field, PlaneMapField):
        if any(hi >= 1.0 / field.delta or lo <= field.delta for lo, hi in annuli):
            raise ValueError("annuli must stay inside the non-identity region")
        kval = lambda z: welding_distortion(field, z)
        mode = mode or "shell_max"
    else:
        kval = field
        mode = mode or "pointwise"
    if mode not in ("shell_max", "pointwise"):
        raise ValueError("mode must be 'shell_max' or 'pointwise'")

    report: dict = {"annuli": [[float(lo), float(hi)] for lo, hi in annuli],
                    "mode": mode, "p_trends": [], "lambda_trends": []}
    for p in p_list:
        inc = np.array([
            _annulus_integral(kval, lambda k: np.power(k, p), lo, hi,
                              theta_samples, radial_cells, mode)
            for lo, hi in annuli
        ])
        verdict, slope = _trend_verdict(inc)
        entry = {"p": float(p), "verdict": verdict, "slope_log2": slope,
                 "increments": inc.tolist(), "total": float(np.sum(inc))}
        if alpha_model is not None:
            q = p * alpha_model
            entry["model_increments"] = [
                _power_gap_integral(lo - 1.0, hi - 1.0, q) for lo, hi in annuli
            ]
        report["p_trends"].append(entry)
    for lam in lambda_list:
        with np.errstate(over="ignore"):
            inc = np.array([
                _annulus_integral(kval, lambda k: np.exp(lam * k), lo, hi,
                                  theta_samples, radial_cells, mode)
                for lo, hi in annuli
            ])
        verdict, slope = _trend_verdict(inc)
        report["lambda_trends"].append(
            {"lambda": float(lam), "verdict": verdict, "slope_log2": slope,
             "increments": [float(v) for v in inc]}
        )
    return report


def _power_gap_integral(s_lo: float, s_hi: float, q: float) -> float:
    """Closed form of int_{s_lo}^{s_hi} s^{-q} ds."""
    if abs(q - 1.0) < 1e-14:
        return math.log(s_hi / s_lo)
    return (s_hi ** (1.0 - q) - s_lo ** (1.0 - q)) / (1.0 - q)


def classify_from_rho(model: str, alpha: float | None = None) -> dict:
    """Map a fitted scalewise-growth model to an integrability class.

    ``log_law`` classifies as exponentially integrable distortion;
    ``power_law`` with exponent alpha > 0 as p-integrable for
    p < 1/alpha; alpha <= 0 reclassifies as bounded (quasiconformal)
    distortion.
    """
    if model == "log_law":
        return {"model": model, "classification": "exp-integrable"}
    if model != "power_law":
        raise ValueError("model must be 'log_law' or 'power_law'")
    if alpha is None:
        raise ValueError("power_law requires alpha")
    if alpha <= 0.0:
        return {"model": model, "alpha": float(alpha),
                "classification": "bounded distortion (quasiconformal)"}
    return {
        "model": model,
        "alpha": float(alpha),
        "classification": "p-integrable",
        "p_threshold": 1.0 / alpha,
        "p_range": [0.0, 1.0 / alpha],
    }


def alpha_from_three_point_exponent(s: float) -> float:
    """Welding growth exponent implied by a power control function t^s."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    return 2.0 * (1.0 / (s * s) - 1.0)


def p_range_from_three_point(s: float) -> tuple[float, float]:
    """p-integrability range (0, s^2 / (2 (1 - s^2))) for control t^s.

    Algebraically identical to (0, 1/alpha) with
    alpha = 2 (1/s^2 - 1); both forms are exposed so the identity can be
    tested directly.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    return (0.0, s * s / (2.0 * (1.0 - s * s)))
