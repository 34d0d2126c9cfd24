"""Discrete Jordan-curve geometry: three-point envelopes and LC checks.

Curves are positively oriented closed polylines.  The three-point
envelope samples boundary pairs (P1, P2), splits the boundary into the
two arcs they bound, and records (d, m) = (|P1 - P2|, min arc diameter);
an upper envelope over binned d is fitted against the control-function
families C t, C t^s and C t log^beta(1/t).  Local connectivity is
checked on rasterized sides by 8-connected grid search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist
from shapely.geometry import Polygon

from ._raster import Raster, rasterize_polygon, same_component
from .control import ControlFunction, make_control

DOMAIN_FAMILIES = ("disk", "ellipse", "square", "interior_cusp", "exterior_cusp")

# Proof slack constants for the equivalence of the three-point property
# and local connectivity: crosscut diameters 2 psi(2r), 3 psi(2r),
# 4 psi(r) and the worst-case arc bound 8 psi(r).
DUALITY_SLACKS = (2.0, 3.0, 4.0, 8.0)


@dataclass
class JordanCurve:
    """Simple closed positively oriented polyline."""

    vertices: np.ndarray
    features: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise ValueError("need at least 3 planar vertices")
        if np.allclose(v[0], v[-1]):
            v = v[:-1]
        self.vertices = v
        if self.signed_area() <= 0.0:
            raise ValueError("curve must be positively oriented (signed area > 0)")
        if not Polygon(v).is_valid:
            raise ValueError("curve is not simple")
        d = np.linalg.norm(np.diff(np.vstack([v, v[:1]]), axis=0), axis=1)
        self.arclength = np.concatenate([[0.0], np.cumsum(d)])

    def __len__(self):
        return self.vertices.shape[0]

    def signed_area(self) -> float:
        v = np.asarray(self.vertices, dtype=float)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def polygon(self) -> Polygon:
        return Polygon(self.vertices)

    def diameter(self) -> float:
        return _points_diameter(self.vertices)

    def bounds(self):
        v = self.vertices
        return float(v[:, 0].min()), float(v[:, 0].max()), float(v[:, 1].min()), float(v[:, 1].max())

    def arc_indices(self, i: int, j: int) -> np.ndarray:
        """Vertex indices of the forward arc from vertex i to vertex j."""
        n = len(self)
        i, j = i % n, j % n
        if i <= j:
            return np.arange(i, j + 1)
        return np.concatenate([np.arange(i, n), np.arange(0, j + 1)])

    def vertex_at_arclength(self, s: float) -> int:
        s = s % self.arclength[-1]
        return int(np.searchsorted(self.arclength, s, side="right") - 1) % len(self)


@dataclass
class Envelope:
    """Sampled (d, m) pairs with the binned upper envelope and its fit."""

    d: np.ndarray
    m: np.ndarray
    bin_d: np.ndarray
    bin_m: np.ndarray
    fit_family: str
    fit_params: dict
    fit_residual: float

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.m / self.d))

    def fitted_control(self) -> ControlFunction:
        if self.fit_family == "linear":
            return make_control("linear", C=self.fit_params["C"])
        if self.fit_family == "power":
            return make_control("power", s=self.fit_params["s"])
        return make_control("log_power", C=self.fit_params["C"],
                            beta=self.fit_params["beta"])


def _points_diameter(pts: np.ndarray) -> float:
    """Diameter (max pairwise distance) of a point set.

    Small sets go straight to pdist; larger ones are reduced to their
    convex hull first (hull vertices realize the diameter).
    """
    pts = np.asarray(pts, dtype=float)
    if pts.shape[0] < 2:
        return 0.0
    if pts.shape[0] > 600:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            # Collinear chains: the bounding-box diagonal is the diameter.
            span = pts.max(axis=0) - pts.min(axis=0)
            return float(np.hypot(span[0], span[1]))
    return float(np.max(pdist(pts)))


def _graded_profile(count: int, grade: float = 2.0) -> np.ndarray:
    """Strictly increasing samples of (0,1] refined toward 0."""
    return ((np.arange(count) + 1.0) / count) ** grade


def make_domain(family: str, n_vertices: int, params=()) -> JordanCurve:
    """Test-domain zoo: disk, ellipse(a, b), square, power cusps.

    The cusp families place a y = +-|x|^{1/s} contact at the origin with
    the spike pointing into the domain (interior) or its complement
    (exterior); flank vertices are graded toward the tip.
    """
    if family not in DOMAIN_FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    n = int(n_vertices)
    if n < 64:
        raise ValueError("n_vertices must be at least 64")
    params = tuple(float(p) for p in np.atleast_1d(params)) if np.size(params) else ()

    if family == "disk":
        ang = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        verts = np.column_stack([np.cos(ang), np.sin(ang)])
        feats = {"family": "disk"}
    elif family == "ellipse":
        a, b = params if len(params) == 2 else (2.0, 1.0)
        if a <= 0.0 or b <= 0.0:
            raise ValueError("ellipse semi-axes must be positive")
        ang = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
        verts = np.column_stack([a * np.cos(ang), b * np.sin(ang)])
        feats = {"family": "ellipse", "a": a, "b": b}
    elif family == "square":
        if n % 4 != 0:
            raise ValueError("square needs a multiple of 4 vertices")
        m = n // 4
        t = np.arange(m) / m
        bottom = np.column_stack([t, np.zeros(m)])
        right = np.column_stack([np.ones(m), t])
        top = np.column_stack([1.0 - t, np.ones(m)])
        left = np.column_stack([np.zeros(m), 1.0 - t])
        verts = np.vstack([bottom, right, top, left])
        feats = {"family": "square"}
    else:
        s = params[0] if params else 0.5
        if not 0.0 < s < 1.0:
            raise ValueError("cusp exponent s must lie in (0, 1)")
        m = n // 4
        x = _graded_profile(m)
        up = np.column_stack([x, x ** (1.0 / s)])
        down = np.column_stack([x, -(x ** (1.0 / s))])
        tip = np.array([[0.0, 0.0]])
        if family == "interior_cusp":
            # Complement spike along +x pointing into the domain; the
            # outer boundary is a 270-degree arc of radius sqrt(2).
            n_arc = n - 2 * m
            ang = np.linspace(0.25 * math.pi, 1.75 * math.pi, n_arc + 2)[1:-1]
            arc = math.sqrt(2.0) * np.column_stack([np.cos(ang), np.sin(ang)])
            verts = np.vstack([tip, up, arc, down[::-1]])
        else:
            # Domain spike pointing toward the origin, closed by a
            # semicircular cap around (1, 0).
            n_arc = n - 2 * m
            ang = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n_arc + 2)[1:-1]
            cap = np.column_stack([1.0 + np.cos(ang), np.sin(ang)])
            verts = np.vstack([tip, down, cap, up[::-1]])
        feats = {"family": family, "cusp_index": 0, "cusp_s": s, "flank_len": m}

    try:
        return JordanCurve(verts, features=feats)
    except ValueError as exc:
        raise ValueError(f"domain discretization failed ({exc}); increase n") from exc


def _pair_indices(curve: JordanCurve, pair_samples: int, rng) -> np.ndarray:
    """Stratified arc-length pairs plus adversarial feature pairs."""
    n = len(curve)
    total_len = curve.arclength[-1]
    s1 = rng.uniform(0.0, total_len, pair_samples)
    s2 = rng.uniform(0.0, total_len, pair_samples)
    pairs = np.column_stack([
        [curve.vertex_at_arclength(a) for a in s1],
        [curve.vertex_at_arclength(b) for b in s2],
    ])
    if "cusp_index" in curve.features:
        # Mirrored flank pairs straddle the tip; these realize the
        # extremal three-point configurations a uniform sample misses.
        m = curve.features["flank_len"]
        ks = np.arange(1, m)
        mirrored = [(k, n - k) for k in ks]
        for off in (1, 2):
            mirrored += [(k, n - k - off) for k in ks[:-off]]
        pairs = np.vstack([pairs, np.array(mirrored)])
    keep = (pairs[:, 0] % n) != (pairs[:, 1] % n)
    return pairs[keep]


def three_point_envelope(curve: JordanCurve, pair_samples: int = 10000,
                         seed: int = 42, bins_per_decade: int = 8) -> Envelope:
    """Sample the three-point quantities and fit a control function.

    For each pair the boundary splits into two arcs; the recorded value
    is min(diam arc1, diam arc2) against the chord |P1 - P2|.  The
    upper envelope over log-binned chords is fitted in log space against
    the three families, ties broken toward the simpler family.
    """
    if pair_samples < 1000:
        raise ValueError("pair_samples must be at least 1000")
    rng = np.random.default_rng(seed)
    pairs = _pair_indices(curve, pair_samples, rng)
    n = len(curve)
    v = curve.vertices
    v2 = np.vstack([v, v])  # doubled so arcs are contiguous slices
    d_all = np.linalg.norm(v[pairs[:, 0] % n] - v[pairs[:, 1] % n], axis=1)
    m_all = np.empty_like(d_all)
    for k, (i, j) in enumerate(pairs):
        i, j = int(i) % n, int(j) % n
        la = (j - i) % n + 1
        m_all[k] = min(
            _points_diameter(v2[i:i + la]),
            _points_diameter(v2[j:j + (n - la + 2)]),
        )
    ok = d_all > 0.0
    d_all, m_all = d_all[ok], m_all[ok]

    # Binned upper envelope in log d.
    lo, hi = np.log(d_all.min()), np.log(d_all.max())
    n_bins = max(6, int((hi - lo) / math.log(10.0) * bins_per_decade))
    which = np.clip(((np.log(d_all) - lo) / (hi - lo + 1e-300) * n_bins).astype(int), 0, n_bins - 1)
    bin_d, bin_m = [], []
    for b in range(n_bins):
        sel = which == b
        if not np.any(sel):
            continue
        k = np.argmax(m_all[sel])
        bin_d.append(d_all[sel][k])
        bin_m.append(m_all[sel][k])
    bin_d = np.array(bin_d)
    bin_m = np.array(bin_m)

    family, params, resid = _fit_envelope(bin_d, bin_m, curve.diameter())
    return Envelope(d_all, m_all, bin_d, bin_m, family, params, resid)


def _fit_envelope(bin_d, bin_m, curve_diam):
    """Residual comparison across {C t, C t^s, C t log^beta(1/t)}."""
    sel = bin_d <= 0.25 * curve_diam
    if np.count_nonzero(sel) >= 4:
        d, m = bin_d[sel], bin_m[sel]
    else:
        d, m = bin_d, bin_m
    ld, lm = np.log(d), np.log(m)

    fits = []
    c_lin = float(np.exp(np.mean(lm - ld)))
    r_lin = float(np.sqrt(np.mean((lm - ld - math.log(c_lin)) ** 2)))
    fits.append(("linear", {"C": c_lin}, r_lin))

    slope, inter = np.polyfit(ld, lm, 1)
    r_pow = float(np.sqrt(np.mean((lm - (slope * ld + inter)) ** 2)))
    fits.append(("power", {"s": float(slope), "C": float(np.exp(inter))}, r_pow))

    logd_ok = d < math.exp(-1.0)
    if np.count_nonzero(logd_ok) >= 4:
        x = np.log(np.log(1.0 / d[logd_ok]))
        y = lm[logd_ok] - ld[logd_ok]
        beta, inter2 = np.polyfit(x, y, 1)
        r_logp = float(np.sqrt(np.mean((y - (beta * x + inter2)) ** 2)))
        if beta > 0.0:
            fits.append(
                ("log_power", {"C": float(np.exp(inter2)), "beta": float(beta)}, r_logp)
            )

    # Ties break toward the simpler family (listed order).
    best = min(f[2] for f in fits)
    for family, params, resid in fits:
        if resid <= best + 0.01:
            return family, params, resid
    raise AssertionError("unreachable")


def lc_check(curve: JordanCurve, side: str, control, kind: str = "lc1",
             grid_res: int = 1024, probe_count: int = 200, seed: int = 42) -> dict:
    """Grid-based local-connectivity probes on one side of the curve.

    LC-1 probes pick two side cells inside B(x, r) and ask for
    8-connected joinability inside B(x, control(r)); LC-2 probes pick
    cells outside B(x, r) and ask for joinability outside
    B(x, control(r)).  ``control`` is a ControlFunction or plain
    callable.  Probes whose geometry the grid cannot resolve are
    skipped and counted separately.
    """
    if side not in ("interior", "exterior"):
        raise ValueError("side must be 'interior' or 'exterior'")
    if kind not in ("lc1", "lc2"):
        raise ValueError("kind must be 'lc1' or 'lc2'")
    raster = _side_raster(curve, side, grid_res)
    if not np.any(raster.mask):
        raise ValueError("unresolvable grid: side rasterizes to nothing")
    h = raster.h
    rng = np.random.default_rng(seed)
    xs, ys = raster.centers()
    window = (xs[0], xs[-1], ys[0], ys[-1])
    span = min(window[1] - window[0], window[3] - window[2])

    centers = _probe_centers(curve, probe_count, window, rng)
    passes, fails, skipped = 0, 0, 0
    worst = None
    for cx, cy in centers:
        r = float(np.exp(rng.uniform(math.log(6.0 * h), math.log(span / 6.0))))
        try:
            target = float(control(r)) if kind == "lc1" else float(control(r))
        except ValueError:
            skipped += 1
            continue
        if kind == "lc1" and target < r:
            raise ValueError("LC-1 control must inflate (control(r) >= r)")
        if kind == "lc2" and target > r:
            raise ValueError("LC-2 control must deflate (control(r) <= r)")
        ball = raster.ball_mask((cx, cy), r)
        inside = raster.mask & ball if kind == "lc1" else raster.mask & ~ball
        cells = np.argwhere(inside)
        if cells.shape[0] < 2:
            skipped += 1
            continue
        a, b = cells[rng.choice(cells.shape[0], 2, replace=False)]
        allowed_ball = raster.ball_mask((cx, cy), target)
        allowed = raster.mask & allowed_ball if kind == "lc1" else raster.mask & ~allowed_ball
        ok = same_component(allowed, tuple(a), tuple(b))
        if ok:
            passes += 1
        else:
            fails += 1
            if worst is None:
                worst = {"center": [cx, cy], "r": r, "target": target,
                         "a": raster_cell_center(raster, a), "b": raster_cell_center(raster, b)}
    informative = passes + fails
    return {
        "side": side,
        "kind": kind,
        "pass_fraction": passes / informative if informative else 1.0,
        "informative": informative,
        "skipped": skipped,
        "worst": worst,
        "grid_res": grid_res,
    }


def raster_cell_center(raster: Raster, idx) -> list:
    return [raster.x0 + (idx[0] + 0.5) * raster.h, raster.y0 + (idx[1] + 0.5) * raster.h]


def _side_raster(curve: JordanCurve, side: str, grid_res: int) -> Raster:
    xmin, xmax, ymin, ymax = curve.bounds()
    if side == "interior":
        pad = 0.02 * max(xmax - xmin, ymax - ymin)
        window = (xmin - pad, xmax + pad, ymin - pad, ymax + pad)
        return rasterize_polygon(curve.vertices, window, grid_res, inside=True)
    pad = 0.75 * max(xmax - xmin, ymax - ymin)
    window = (xmin - pad, xmax + pad, ymin - pad, ymax + pad)
    return rasterize_polygon(curve.vertices, window, grid_res, inside=False)


def _probe_centers(curve: JordanCurve, probe_count: int, window, rng) -> np.ndarray:
    """Mix of boundary vertices, interior window points, and feature points."""
    n_bdry = probe_count // 2
    n_window = probe_count // 4
    n_feat = probe_count - n_bdry - n_window
    idx = rng.integers(0, len(curve), n_bdry)
    bdry = curve.vertices[idx]
    box = np.column_stack([
        rng.uniform(window[0], window[1], n_window),
        rng.uniform(window[2], window[3], n_window),
    ])
    if "cusp_index" in curve.features:
        tip = curve.vertices[curve.features["cusp_index"]]
        feat = tip + rng.normal(scale=0.05, size=(n_feat, 2))
    else:
        idx = rng.integers(0, len(curve), n_feat)
        feat = curve.vertices[idx]
    return np.vstack([bdry, box, feat])


def cusp_lc1_probes(curve: JordanCurve, side: str, control, grid_res: int = 1024,
                    x_values=None) -> dict:
    """Deterministic LC-1 probes straddling a cusp tip.

    Places point pairs on opposite flanks just inside the requested
    side and asks for joinability inside the inflated ball.  These are
    the adversarial configurations that break linear local connectivity
    at an interior cusp.
    """
    if "cusp_s" not in curve.features:
        raise ValueError("curve has no cusp feature")
    s = curve.features["cusp_s"]
    raster = _side_raster(curve, side, grid_res)
    h = raster.h
    if x_values is None:
        x_lo = max((6.0 * h) ** s, 12.0 * h)
        x_values = np.geomspace(x_lo, 0.45, 8)
    results = []
    for x in x_values:
        half = x ** (1.0 / s)
        off = 3.0 * h if side == "interior" else -3.0 * h
        a = (x, half + off)
        b = (x, -half - off)
        r = 0.6 * abs(a[1] - b[1]) + 2.0 * h
        target = float(control(r))
        try:
            ia, ib = raster.cell_of(a), raster.cell_of(b)
        except ValueError:
            continue
        if not (raster.mask[ia] and raster.mask[ib]):
            continue
        allowed = raster.mask & raster.ball_mask(((a[0] + b[0]) / 2.0, 0.0), target)
        ok = same_component(allowed, ia, ib)
        results.append({"x": float(x), "r": float(r), "target": target, "joined": bool(ok)})
    if not results:
        raise ValueError("unresolvable grid: no cusp probe fits")
    frac = sum(p["joined"] for p in results) / len(results)
    return {"side": side, "probes": results, "pass_fraction": frac}


def duality_check(curve: JordanCurve, psi: ControlFunction, pair_samples: int = 4000,
                  grid_res: int = 768, probe_count: int = 120, seed: int = 42) -> dict:
    """Empirical two-direction check of the three-point/LC equivalence.

    Direction A (three-point => LC): both sides must be LC-1 for the
    inflation r -> k psi(2r) at some proof slack k <= 8.
    Direction B (LC => three-point): the sampled envelope must satisfy
    m <= 8 psi(d) (the proof's worst crosscut constant).
    """
    env = three_point_envelope(curve, pair_samples, seed=seed)

    slack_used = None
    lc_reports = None
    for k in DUALITY_SLACKS:
        def phi(r, _k=k):
            return _k * psi(2.0 * r)

        rep_int = lc_check(curve, "interior", phi, "lc1", grid_res, probe_count, seed)
        rep_ext = lc_check(curve, "exterior", phi, "lc1", grid_res, probe_count, seed)
        lc_reports = (rep_int, rep_ext)
        if rep_int["pass_fraction"] == 1.0 and rep_ext["pass_fraction"] == 1.0:
            slack_used = k
            break

    ratios = env.m / np.maximum(psi(env.d), 1e-300)
    max_ratio = float(np.max(ratios))
    return {
        "three_point_to_lc": {
            "passed": slack_used is not None,
            "slack_used": slack_used,
            "interior": lc_reports[0],
            "exterior": lc_reports[1],
        },
        "lc_to_three_point": {
            "passed": max_ratio <= DUALITY_SLACKS[-1],
            "max_ratio": max_ratio,
            "slack_ceiling": DUALITY_SLACKS[-1],
        },
        "envelope_family": env.fit_family,
        "envelope_params": env.fit_params,
    }


def internal_distance(curve: JordanCurve, side: str, a, b, grid_res: int = 512) -> float:
    """Infimal connecting-curve diameter inside one side of the curve.

    Binary search over the diameter bound D: feasibility means the two
    cells are 8-connected inside side ∩ B(midpoint, D/2).  Always at
    least the Euclidean distance; resolved to grid accuracy.
    """
    raster = _side_raster(curve, side, grid_res)
    ia, ib = raster.cell_of(a), raster.cell_of(b)
    if not (raster.mask[ia] and raster.mask[ib]):
        raise ValueError("endpoints must lie strictly inside the chosen side")
    mid = (0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]))
    dist = math.hypot(b[0] - a[0], b[1] - a[1])
    xs, ys = raster.centers()
    lo = dist
    hi = 2.0 * math.hypot(xs[-1] - xs[0], ys[-1] - ys[0])

    def feasible(dd: float) -> bool:
        allowed = raster.mask & raster.ball_mask(mid, dd / 2.0)
        return same_component(allowed, ia, ib)

    if not feasible(hi):
        raise ValueError("endpoints are disconnected inside the side raster")
    for _ in range(40):
        midd = 0.5 * (lo + hi)
        if feasible(midd):
            hi = midd
        else:
            lo = midd
        if hi - lo < 0.25 * raster.h:
            break
    return hi
