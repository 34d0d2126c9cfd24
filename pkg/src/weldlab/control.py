"""Control functions for the three-point property and their evaluators.

A control function psi is an increasing function on (0, t_max] with
psi(0+) = 0.  Families: linear C*t, power t^s, log-power
C * t * log^beta(1/t) (monotone below e^{-beta}, so that family carries a
finite t_max), and monotone tables.  All unnamed multiplicative
constants of the source estimates are carried symbolically with value 1;
the evaluators therefore support trend and slope comparisons, never
absolute ones.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

_BISECT_ITERS = 200
_BISECT_RTOL = 1e-13

# Finite-grid surrogate for the limsup condition: the tail (last three
# decades) must plateau within this factor to call the series bounded,
# and the full-grid growth must reach this factor to call it unbounded.
PLATEAU_TOL = 1.05
GROWTH_THRESHOLD = 10.0

FAMILIES = ("linear", "power", "log_power", "table")


@dataclass
class ControlFunction:
    family: str
    params: tuple = ()
    t_max: float = math.inf
    table_t: np.ndarray | None = None
    table_v: np.ndarray | None = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.t_max * (1.0 + 1e-12)):
            raise ValueError(f"argument outside domain (0, {self.t_max}]")
        if self.family == "linear":
            out = self.params[0] * t
        elif self.family == "power":
            out = np.power(t, self.params[0])
        elif self.family == "log_power":
            c, beta = self.params
            with np.errstate(divide="ignore"):
                ell = np.log(1.0 / np.where(t > 0.0, t, 1.0))
            out = np.where(t > 0.0, c * t * np.where(t > 0.0, ell, 1.0) ** beta, 0.0)
        elif self.family == "table":
            out = np.interp(t, self.table_t, self.table_v)
        else:
            raise ValueError(f"unknown family {self.family!r}")
        return float(out) if out.ndim == 0 else out

    @property
    def r_max(self) -> float:
        """Largest invertible value psi(t_max)."""
        if math.isinf(self.t_max):
            return math.inf
        return float(self(self.t_max))

    def inverse(self, r):
        """t with psi(t) = r to relative residual 1e-12, via bisection.

        Closed form for the linear and power families.
        """
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0.0) or np.any(r > self.r_max * (1.0 + 1e-12)):
            raise ValueError("inverse argument outside range")
        if self.family == "linear":
            out = r / self.params[0]
        elif self.family == "power":
            out = np.power(r, 1.0 / self.params[0])
        else:
            out = self._bisect_inverse(np.atleast_1d(r)).reshape(r.shape)
        return float(out) if out.ndim == 0 else out

    def _bisect_inverse(self, r):
        lo = np.full(r.shape, -750.0)  # log t; e^-750 underflows psi below any r here
        hi = np.full(r.shape, math.log(self.t_max))
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            val = self(np.exp(mid))
            high = val > r
            hi = np.where(high, mid, hi)
            lo = np.where(high, lo, mid)
            if np.max(np.abs(val - r) / r) <= _BISECT_RTOL:
                break
        t = np.exp(0.5 * (lo + hi))
        if np.max(np.abs(self(t) - r) / r) > 1e-12:
            raise ValueError("bisection failed to invert control function")
        return t

    def compose_self(self, t):
        """psi(psi(t)); the inner value must stay inside the domain."""
        return self(self(t))

    def inverse_twice(self, r):
        """psi^{-1}(psi^{-1}(r))."""
        return self.inverse(self.inverse(r))

    def doubling_constants(self, t_lo: float | None = None, samples: int = 40):
        """Empirical (C1, C2) with C1 psi(t) <= psi(2t) <= C2 psi(t) on dyadic t."""
        hi = self.t_max / 2.0 if math.isfinite(self.t_max) else 1.0
        lo = t_lo if t_lo is not None else hi * 1e-9
        t = np.geomspace(lo, hi, samples)
        ratio = self(2.0 * t) / self(t)
        return float(np.min(ratio)), float(np.max(ratio))

    def technical_condition_holds(self, samples: int = 200) -> bool:
        """Whether t -> t / psi^{-1}(t)^2 is decreasing on sampled points."""
        hi = self.r_max if math.isfinite(self.r_max) else 1.0
        r = np.geomspace(hi * 1e-10, hi * 0.999, samples)
        vals = r / self.inverse(r) ** 2
        return bool(np.all(np.diff(vals) <= 1e-9 * vals[:-1]))

    def to_json(self) -> str:
        if self.family == "linear":
            params = {"C": self.params[0]}
        elif self.family == "power":
            params = {"s": self.params[0]}
        elif self.family == "log_power":
            params = {"C": self.params[0], "beta": self.params[1]}
        else:
            params = {"t": self.table_t.tolist(), "values": self.table_v.tolist()}
        return json.dumps({"family": self.family, "params": params}, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ControlFunction":
        obj = json.loads(text)
        family, p = obj["family"], obj["params"]
        if family == "linear":
            return make_control("linear", C=p["C"])
        if family == "power":
            return make_control("power", s=p["s"])
        if family == "log_power":
            return make_control("log_power", C=p["C"], beta=p["beta"])
        return make_control("table", t=p["t"], values=p["values"])


def make_control(family: str, **kw) -> ControlFunction:
    """Build a control function; see module docstring for the families."""
    if family == "linear":
        c = float(kw.get("C", 1.0))
        if c <= 0.0:
            raise ValueError("linear constant must be positive")
        return ControlFunction("linear", (c,))
    if family == "power":
        s = float(kw["s"])
        if s <= 0.0:
            raise ValueError("power exponent must be positive")
        return ControlFunction("power", (s,))
    if family == "log_power":
        c = float(kw.get("C", 1.0))
        beta = float(kw["beta"])
        if c <= 0.0 or beta <= 0.0:
            raise ValueError("log_power needs positive C and beta")
        # C t log^beta(1/t) increases only below e^{-beta}.
        t_max = float(kw.get("t_max", 0.5 * math.exp(-beta)))
        if t_max >= math.exp(-beta):
            raise ValueError("t_max must stay below e^{-beta}")
        return ControlFunction("log_power", (c, beta), t_max=t_max)
    if family == "table":
        t = np.asarray(kw["t"], dtype=float)
        v = np.asarray(kw["values"], dtype=float)
        if t.size != v.size or t.size < 2:
            raise ValueError("table needs matching t and value arrays")
        if np.any(np.diff(t) <= 0.0) or np.any(np.diff(v) <= 0.0):
            raise ValueError("table must be strictly increasing")
        if t[0] <= 0.0:
            raise ValueError("table domain starts above 0")
        tt = np.concatenate([[0.0], t])
        vv = np.concatenate([[0.0], v])
        return ControlFunction("table", (), t_max=float(t[-1]), table_t=tt, table_v=vv)
    raise ValueError(f"unknown family {family!r}")


def inverse_eval(psi: ControlFunction, r: float) -> float:
    """psi^{-1}(r); bisection for families without a closed form."""
    return float(psi.inverse(r))


def thm51_condition(psi: ControlFunction, r_grid=None) -> dict:
    """Finite-grid verdict on limsup_{r->0} r / (psi^-1(psi^-1(r)) log(1/r)).

    The grid must span at least 6 decades down to 1e-12.  Verdict rule
    (stated so tests are deterministic): with q evaluated on the grid,
    "bounded" if q grows by at most PLATEAU_TOL over the last three
    decades (non-increasing or plateauing), "unbounded" if it keeps
    growing there and the full-grid growth reaches GROWTH_THRESHOLD,
    otherwise "indeterminate".  A true limsup is not computable from
    samples; slowly growing iterated logs below the grid's resolution
    are reported as indeterminate.
    """
    if r_grid is None:
        # Deep default grid: log-power growth is slow, and the 10x
        # threshold needs ~20 decades to trigger for beta just above 1.
        r_grid = np.geomspace(1e-1, 1e-24, 80)
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(np.diff(r_grid) >= 0.0):
        raise ValueError("r_grid must be decreasing")
    if r_grid[0] / r_grid[-1] < 1e6 or r_grid[-1] > 1e-12 * (1.0 + 1e-9):
        raise ValueError("r_grid must span >= 6 decades down to <= 1e-12")
    q = r_grid / (psi.inverse_twice(r_grid) * np.log(1.0 / r_grid))
    tail = r_grid <= r_grid[-1] * 1e3
    q_tail = q[tail]
    g3 = float(q_tail[-1] / q_tail[0])
    g_total = float(q[-1] / q[0])
    if g3 <= PLATEAU_TOL:
        verdict = "bounded"
    elif g_total >= GROWTH_THRESHOLD:
        verdict = "unbounded"
    else:
        verdict = "indeterminate"
    return {
        "r_grid": r_grid.tolist(),
        "q": q.tolist(),
        "limsup_estimate": float(np.max(q_tail)),
        "tail_growth": g3,
        "total_growth": g_total,
        "verdict": verdict,
    }


def scalewise_bound_from_psi(psi: ControlFunction, t: float) -> float:
    """The welding scalewise-distortion bound t^2 / psi^-1(psi^-1(t^2)).

    The multiplicative constant of the source estimate is symbolic and
    set to 1 here; only slopes and trends of the returned values are
    meaningful.
    """
    return float(t * t / psi.inverse_twice(t * t))


def scalewise_bound_profile(psi: ControlFunction, t_grid=None, t0: float = 0.1) -> dict:
    """Evaluate the scalewise bound on a grid of scales t <= t0.

    t0 is the unquantified smallness threshold of the underlying
    estimate, exposed as a parameter (default 0.1).
    """
    if t_grid is None:
        t_grid = np.geomspace(t0, t0 * 1e-4, 17)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid > t0):
        raise ValueError("t_grid must stay below t0")
    vals = np.array([scalewise_bound_from_psi(psi, float(t)) for t in t_grid])
    return {"t": t_grid.tolist(), "bound": vals.tolist(), "t0": float(t0)}


def key_modulus_bound(psi: ControlFunction, d: float):
    """Diameter bound psi(psi(d)) and the modulus-bound kernel.

    Returns (psi(psi(d)), kernel) with
    kernel(m) = 1 / log(1 + psi^-1(psi^-1(m)) / m); the absolute
    prefactor C0^-1 of the source bound is carried symbolically.
    """
    diam_bound = float(psi.compose_self(d))

    def kernel(m: float) -> float:
        return float(1.0 / math.log1p(psi.inverse_twice(m) / m))

    return diam_bound, kernel


def lemma35_constant(C1: float, C2: float, C3: float, phi: ControlFunction,
                     t_grid) -> float:
    """Smallest doubling-search constant C with C1 phi(C2 t) + C3 t <= phi(C t).

    The search runs over C in {2^k, k = 0..40} and checks the inequality
    on every grid point; exhaustion signals an inadmissible phi.
    """
    if min(C1, C2, C3) < 1.0:
        raise ValueError("constants must be >= 1")
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0.0):
        raise ValueError("t_grid must be positive")
    if np.any(phi(t) < t * (1.0 - 1e-12)):
        raise ValueError("phi must dominate the identity on the grid")
    lhs = C1 * phi(C2 * t) + C3 * t
    for k in range(41):
        c = 2.0 ** k
        if np.all(lhs <= phi(c * t) * (1.0 + 1e-12)):
            return c
    raise ValueError("inequality not satisfiable on grid")


def hoelder_bound(phi: ControlFunction, K: float):
    """Modulus-of-continuity bound t -> phi(t)^{1/(2K)} (constant symbolic)."""
    if K < 1.0:
        raise ValueError("K must be >= 1")
    expo = 1.0 / (2.0 * K)

    def bound(t):
        return phi(t) ** expo

    return bound
