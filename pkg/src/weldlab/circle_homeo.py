"""Circle homeomorphisms represented by lifts, and their scalewise distortion.

A sense-preserving circle homeomorphism G is stored through its lift
h: R -> R, a strictly increasing map with h(x+1) = h(x) + 1, so that
G(e^{2*pi*i*x}) = e^{2*pi*i*h(x)}.  The model families below realize the
growth rates used throughout the test suite:

* ``identity`` / ``rotation``: distortion-free references,
* ``power``: h(x) = 2^{a-1} x^a on [0, 1/2], affine on [1/2, 1]; its
  scalewise distortion grows like t^{-(a-1)},
* ``log_power``: h(x) ~ x / log^beta(1/x) near 0; scalewise distortion
  grows like log^beta(1/t),
* ``table``: monotone piecewise-linear interpolation of sampled values.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

FAMILIES = ("identity", "rotation", "power", "log_power", "table")

# Chords shorter than this are treated as a collapsed image point.
_CHORD_FLOOR = 1e-300


@dataclass
class CircleHomeo:
    """A circle homeomorphism represented by its lift.

    ``params`` is family specific: rotation offset c (wrapped to
    [-1/2, 1/2)), power exponent a > 0, log-power exponent beta > 0.
    Table lifts carry node values on a uniform grid over [0, 1].
    """

    family: str
    params: tuple = ()
    table_x: np.ndarray | None = None
    table_h: np.ndarray | None = None
    # Kink locations of the lift inside the base cell [0, 1); subset of
    # them where derivatives are unbounded (quadrature must grade there).
    breakpoints: np.ndarray = field(default_factory=lambda: np.zeros(0))
    singular_points: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def lift(self, x):
        """Evaluate h at real x (scalar or array), using h(x+1) = h(x)+1."""
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        u = x - k
        return self._base(u) + k

    def _base(self, u):
        """h on the base cell, u in [0, 1]."""
        if self.family == "identity":
            return u.copy() if isinstance(u, np.ndarray) else u
        if self.family == "rotation":
            return u + self.params[0]
        if self.family == "power":
            a = self.params[0]
            out = np.where(u <= 0.5, 2.0 ** (a - 1.0) * np.power(u, a), u)
            return out
        if self.family == "log_power":
            beta = self.params[0]
            scale = math.log(2.0) ** beta
            with np.errstate(divide="ignore"):
                ell = np.log(1.0 / np.where(u > 0.0, u, 1.0))
            sing = scale * u * np.where(u > 0.0, ell, 1.0) ** (-beta)
            out = np.where(u <= 0.5, np.where(u > 0.0, sing, 0.0), u)
            return out
        if self.family == "table":
            return np.interp(u, self.table_x, self.table_h)
        raise ValueError(f"unknown family {self.family!r}")

    def circle_map(self, theta):
        """Image of e^{i*theta} on the unit circle, as a complex number."""
        x = np.asarray(theta, dtype=float) / TWO_PI
        return np.exp(2j * math.pi * self.lift(x))

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        obj = {"family": self.family, "params": list(self.params)}
        if self.family == "table":
            obj["table"] = [[float(x), float(h)] for x, h in zip(self.table_x, self.table_h)]
        return json.dumps(obj, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "CircleHomeo":
        obj = json.loads(text)
        if obj["family"] == "table":
            table = np.asarray(obj["table"], dtype=float)
            return build_model_homeo("table", table[:, 1])
        return build_model_homeo(obj["family"], obj.get("params", []))


@dataclass
class ScalewiseProfile:
    """Radial samples of the scalewise distortion rho(t) = sup_theta delta."""

    t_grid: np.ndarray
    rho_values: np.ndarray
    theta_argmax: np.ndarray

    def __post_init__(self):
        self.t_grid = np.asarray(self.t_grid, dtype=float)
        self.rho_values = np.asarray(self.rho_values, dtype=float)
        self.theta_argmax = np.asarray(self.theta_argmax, dtype=float)
        if np.any(np.diff(self.t_grid) >= 0.0):
            raise ValueError("t_grid must be strictly decreasing")
        if np.any(self.rho_values < 1.0 - 1e-12):
            raise ValueError("scalewise distortion values must be >= 1")


def build_model_homeo(family: str, params=()) -> CircleHomeo:
    """Construct a lift from one of the model families.

    Raises ValueError for invalid parameters (non-positive power
    exponent, non-monotone table, unknown family).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    params = tuple(np.atleast_1d(np.asarray(params, dtype=float)).tolist())

    if family == "identity":
        h = CircleHomeo("identity", ())
    elif family == "rotation":
        if len(params) != 1:
            raise ValueError("rotation takes a single offset parameter")
        # Wrap the offset into the fundamental domain so that
        # C0 = int_0^1 h - 1/2 stays in [-1/2, 1/2].
        c = params[0] - math.floor(params[0] + 0.5)
        h = CircleHomeo("rotation", (c,))
    elif family == "power":
        if len(params) != 1 or params[0] <= 0.0:
            raise ValueError("power exponent must be positive")
        h = CircleHomeo(
            "power",
            (params[0],),
            breakpoints=np.array([0.0, 0.5]),
            singular_points=np.array([0.0]),
        )
    elif family == "log_power":
        if len(params) != 1 or params[0] <= 0.0:
            raise ValueError("log_power exponent must be positive")
        h = CircleHomeo(
            "log_power",
            (params[0],),
            breakpoints=np.array([0.0, 0.5]),
            singular_points=np.array([0.0]),
        )
    else:  # table
        values = np.asarray(params, dtype=float)
        if values.size < 2:
            raise ValueError("table needs at least two node values")
        if np.any(np.diff(values) <= 0.0):
            raise ValueError("table values must be strictly increasing")
        if abs((values[-1] - values[0]) - 1.0) > 1e-12:
            raise ValueError("table must satisfy h(1) = h(0) + 1")
        x = np.linspace(0.0, 1.0, values.size)
        h = CircleHomeo(
            "table",
            (),
            table_x=x,
            table_h=values - values[0],
            breakpoints=x[:-1].copy(),
        )

    _validate_monotone(h)
    return h


def _validate_monotone(h: CircleHomeo, samples: int = 4096) -> None:
    x = np.linspace(0.0, 2.0, samples)
    v = h.lift(x)
    if np.any(np.diff(v) <= 0.0):
        raise ValueError("lift is not strictly increasing on sampled grid")
    if np.max(np.abs(h.lift(x + 1.0) - v - 1.0)) > 1e-12:
        raise ValueError("lift does not commute with unit translation")


def _chord(a, b):
    # |e^{2 pi i a} - e^{2 pi i b}| without complex round-trips.
    return 2.0 * np.abs(np.sin(math.pi * (a - b)))


def delta(f: CircleHomeo, theta, t: float):
    """Symmetric three-point chordal ratio delta(theta, t) of the circle map.

    With F the circle homeomorphism of ``f``, this is the larger of the
    two ratios |F(e^{i(theta+t)}) - F(e^{i theta})| / |F(e^{i theta}) -
    F(e^{i(theta-t)})| and its reciprocal.  Requires 0 < t < pi/2.
    """
    if not 0.0 < t < math.pi / 2.0:
        raise ValueError("t must lie in (0, pi/2)")
    theta = np.asarray(theta, dtype=float)
    x = theta / TWO_PI
    tau = t / TWO_PI
    hp = f.lift(x + tau)
    h0 = f.lift(x)
    hm = f.lift(x - tau)
    plus = _chord(hp, h0)
    minus = _chord(h0, hm)
    if np.any(plus < _CHORD_FLOOR) or np.any(minus < _CHORD_FLOOR):
        raise ValueError("homeomorphism not injective at sample")
    q = plus / minus
    out = np.maximum(q, 1.0 / q)
    return float(out) if out.ndim == 0 else out


def delta_lift(f: CircleHomeo, x, t: float):
    """Line-level three-point ratio of the lift itself (no chords).

    This is the quantity controlling the distortion of the half-plane
    extension; ``delta`` is its chordal analogue on the circle.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    x = np.asarray(x, dtype=float)
    hp = f.lift(x + t)
    h0 = f.lift(x)
    hm = f.lift(x - t)
    plus = hp - h0
    minus = h0 - hm
    if np.any(plus < _CHORD_FLOOR) or np.any(minus < _CHORD_FLOOR):
        raise ValueError("homeomorphism not injective at sample")
    q = plus / minus
    out = np.maximum(q, 1.0 / q)
    return float(out) if out.ndim == 0 else out


def _golden_max(fun, lo: float, hi: float, iters: int = 60):
    """Golden-section maximization of a continuous scalar function."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    if fc >= fd:
        return c, fc
    return d, fd


def rho(f: CircleHomeo, t: float, theta_samples: int = 1024, refine: bool = True):
    """Scalewise distortion rho(t) = sup_theta delta(theta, t), with argmax.

    The sup is approximated by the max over a uniform theta grid
    (containing theta = 0, so nested grids give monotone sups) followed
    by one golden-section refinement around the grid argmax.
    """
    if theta_samples < 64:
        raise ValueError("theta_samples must be at least 64")
    thetas = np.linspace(0.0, TWO_PI, theta_samples, endpoint=False)
    vals = delta(f, thetas, t)
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), float(thetas[i])
    if refine:
        span = TWO_PI / theta_samples
        th, val = _golden_max(lambda th_: delta(f, th_, t), arg - span, arg + span)
        if val > best:
            best, arg = float(val), float(th % TWO_PI)
    return best, arg


def rho_lift(f: CircleHomeo, t: float, x_samples: int = 1024, refine: bool = True):
    """sup_x of the line-level ratio; periodic in x with period 1."""
    xs = np.linspace(0.0, 1.0, x_samples, endpoint=False)
    vals = delta_lift(f, xs, t)
    i = int(np.argmax(vals))
    best, arg = float(vals[i]), float(xs[i])
    if refine:
        span = 1.0 / x_samples
        xr, val = _golden_max(lambda x_: delta_lift(f, x_, t), arg - span, arg + span)
        if val > best:
            best, arg = float(val), float(xr % 1.0)
    return best, arg


def scalewise_profile(
    f: CircleHomeo, t_grid, theta_samples: int = 1024
) -> ScalewiseProfile:
    """Evaluate rho over a decreasing t grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    rhos, args = [], []
    for t in t_grid:
        r, a = rho(f, float(t), theta_samples)
        rhos.append(r)
        args.append(a)
    return ScalewiseProfile(t_grid, np.array(rhos), np.array(args))


def rho_log_slope(profile: ScalewiseProfile) -> float:
    """Least-squares slope of log rho against log(1/t).

    For the power family with exponent a the slope approaches a - 1.
    """
    x = np.log(1.0 / profile.t_grid)
    y = np.log(profile.rho_values)
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
