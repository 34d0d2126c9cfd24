"""Beurling-Ahlfors extension of a lift to the closed upper half-plane.

For a lift h the extension is, in the open strip 0 < y < 1,

    H(x+iy) = 1/2 * int_0^1 (h(x+ty) + h(x-ty)) dt
              + i * int_0^1 (h(x+ty) - h(x-ty)) dt,

continued by H(x+iy) = x + iy + (2-y)*C0 for 1 <= y <= 2 (with
C0 = int_0^1 h - 1/2) and by the identity for y >= 2.  H agrees with h on
the real axis and commutes with unit translations.

The t-integrals are computed as integrals of h over the windows
[x-y, x] and [x, x+y] (substitution s = x -+ ty) by composite
Gauss-Legendre quadrature of the declared order.  Panels are split at
the lift's kink points, and panels whose left end touches a singular
lift point are subdivided geometrically toward it so the quadrature
stays accurate for power-type lifts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from .circle_homeo import CircleHomeo

# Geometric grading used next to singular lift points: number of levels
# and the per-level quadrature order (a fraction of the declared order).
_GRADE_LEVELS = 24
_NEAR_BOUNDARY_FLOOR = 1e-6


@dataclass
class StripMap:
    """Evaluable Beurling-Ahlfors extension of a lift on {Im z >= 0}."""

    homeo: CircleHomeo
    quad_order: int
    C0: float = 0.0

    def __post_init__(self):
        order = int(self.quad_order)
        if order < 16:
            raise ValueError("quad_order must be at least 16")
        self.quad_order = order
        nodes, weights = roots_legendre(order)
        # Rescaled to [0, 1].
        self._nodes = 0.5 * (nodes + 1.0)
        self._weights = 0.5 * weights
        g_order = min(16, max(8, order // 4))
        g_nodes, g_weights = roots_legendre(g_order)
        self._g_nodes = 0.5 * (g_nodes + 1.0)
        self._g_weights = 0.5 * g_weights
        self._breaks = np.sort(np.asarray(self.homeo.breakpoints, dtype=float))
        self._singular = np.asarray(self.homeo.singular_points, dtype=float)
        if self.homeo.family == "table":
            # Piecewise-linear lifts integrate exactly: cumulative
            # trapezoid at the nodes plus exact partial cells.
            x, h = self.homeo.table_x, self.homeo.table_h
            self._table_cum = np.concatenate(
                [[0.0], np.cumsum(0.5 * (h[1:] + h[:-1]) * np.diff(x))]
            )
        self.C0 = float(self._segment_integral(np.array([0.0]), np.array([1.0]))[0]) - 0.5

    # -- lift integration --------------------------------------------------

    def _segment_integral(self, u0, u1):
        """int_{u0}^{u1} h(s) ds elementwise; requires 0 <= u1-u0 <= 1."""
        if self.homeo.family == "table":
            return self._table_antideriv(u1) - self._table_antideriv(u0)

        n = u0.shape[0]
        if self._breaks.size == 0:
            return self._panel_quad(u0, u1)

        # Panel edges: segment ends plus kink crossings inside.
        cands = []
        for b in self._breaks:
            k0 = np.ceil(u0 - b)
            for shift in (0.0, 1.0):
                c = b + k0 + shift
                cands.append(np.where((c > u0) & (c < u1), c, u1))
        edges = np.sort(np.stack([u0] + cands + [u1], axis=1), axis=1)

        total = np.zeros(n)
        for i in range(edges.shape[1] - 1):
            lo, hi = edges[:, i], edges[:, i + 1]
            sing = self._is_singular_left(lo) & (hi > lo)
            if np.any(sing):
                idx = np.nonzero(sing)[0]
                total[idx] += self._graded_quad(lo[idx], hi[idx])
                idx = np.nonzero(~sing)[0]
                if idx.size:
                    total[idx] += self._panel_quad(lo[idx], hi[idx])
            else:
                total += self._panel_quad(lo, hi)
        return total

    def _is_singular_left(self, edge):
        if self._singular.size == 0:
            return np.zeros(edge.shape, dtype=bool)
        flag = np.zeros(edge.shape, dtype=bool)
        for s in self._singular:
            d = edge - s
            flag |= np.abs(d - np.round(d)) < 1e-12
        return flag

    def _panel_quad(self, lo, hi):
        length = hi - lo
        pts = lo[:, None] + length[:, None] * self._nodes[None, :]
        return (self.homeo.lift(pts) @ self._weights) * length

    def _graded_quad(self, lo, hi):
        """Geometric subdivision toward the (singular) left endpoint."""
        delta = hi - lo
        scales = 0.5 ** np.arange(_GRADE_LEVELS + 1)
        uppers = lo[:, None] + delta[:, None] * scales[None, :]
        # Bottom panel closes onto the singular point itself.
        lowers = np.concatenate([uppers[:, 1:], lo[:, None]], axis=1)
        lens = uppers - lowers
        pts = lowers[:, :, None] + lens[:, :, None] * self._g_nodes[None, None, :]
        vals = self.homeo.lift(pts) @ self._g_weights
        return np.sum(vals * lens, axis=1)

    def _table_antideriv(self, u):
        k = np.floor(u)
        s = u - k
        x, h = self.homeo.table_x, self.homeo.table_h
        j = np.clip(np.searchsorted(x, s, side="right") - 1, 0, x.size - 2)
        hs = np.interp(s, x, h)
        base = self._table_cum[j] + 0.5 * (h[j] + hs) * (s - x[j])
        i1 = self._table_cum[-1]
        return base + k * s + 0.5 * k * (k - 1.0) + k * i1

    # -- evaluation ---------------------------------------------------------

    def partials(self, z):
        """Exact partial derivatives (dH/dx, dH/dy) as complex numbers.

        In the strip these are window differences of the boundary data:
        with S+ = int_x^{x+y} h and S- = int_{x-y}^x h,

            Re H = (S+ + S-)/(2y),  Im H = (S+ - S-)/y,

        and differentiating the window ends gives DH from h values and
        the same integrals the evaluator computes.  Accuracy is that of
        the quadrature; in particular the formulas stay valid on the
        rays where the lift is merely continuous and finite differences
        in x degenerate.
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        x, y = z.real, z.imag
        if np.any(y <= 0.0):
            raise ValueError("partials require Im z > 0")
        dx = np.empty_like(z)
        dy = np.empty_like(z)

        strip = y < 1.0
        if np.any(strip):
            xs, ys = x[strip], y[strip]
            s_plus = self._segment_integral(xs, xs + ys)
            s_minus = self._segment_integral(xs - ys, xs)
            hp = self.homeo.lift(xs + ys)
            h0 = self.homeo.lift(xs)
            hm = self.homeo.lift(xs - ys)
            u = 0.5 * (s_plus + s_minus) / ys
            v = (s_plus - s_minus) / ys
            ux = 0.5 * (hp - hm) / ys
            vx = (hp - 2.0 * h0 + hm) / ys
            uy = 0.5 * (hp + hm) / ys - u / ys
            vy = (hp - hm) / ys - v / ys
            dx[strip] = ux + 1j * vx
            dy[strip] = uy + 1j * vy

        linear = (y >= 1.0) & (y <= 2.0)
        if np.any(linear):
            dx[linear] = 1.0
            dy[linear] = -self.C0 + 1j

        top = y > 2.0
        if np.any(top):
            dx[top] = 1.0
            dy[top] = 1j
        return dx, dy

    def __call__(self, z):
        """Evaluate H at complex z (scalar or array) with Im z >= 0."""
        z = np.asarray(z, dtype=complex)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        x, y = z.real, z.imag
        if np.any(y < -1e-15):
            raise ValueError("H is defined on the closed upper half-plane")
        y = np.maximum(y, 0.0)
        out = np.empty_like(z)

        strip = (y > 0.0) & (y < 1.0)
        if np.any(strip):
            xs, ys = x[strip], y[strip]
            # Window means over the representable windows: for y near the
            # ulp of x, fl(x+y) - x differs from y and dividing by the
            # nominal y would corrupt the mean value.
            hi = xs + ys
            lo = xs - ys
            len_p = hi - xs
            len_m = xs - lo
            ok = (len_p > 0.0) & (len_m > 0.0)
            plus = np.where(ok, self._segment_integral(xs, hi) / np.where(ok, len_p, 1.0), 0.0)
            minus = np.where(ok, self._segment_integral(lo, xs) / np.where(ok, len_m, 1.0), 0.0)
            vals = 0.5 * (plus + minus) + 1j * (plus - minus)
            # Fully degenerate windows collapse to the boundary trace.
            vals = np.where(ok, vals, self.homeo.lift(xs) + 0j)
            out[strip] = vals

        linear = (y >= 1.0) & (y <= 2.0)
        if np.any(linear):
            out[linear] = z[linear] + (2.0 - y[linear]) * self.C0

        top = y > 2.0
        if np.any(top):
            out[top] = z[top]

        floor = y == 0.0
        if np.any(floor):
            out[floor] = self.homeo.lift(x[floor])

        return complex(out[0]) if scalar else out


def ba_extend(h: CircleHomeo, quad_order: int = 64) -> StripMap:
    """Construct the Beurling-Ahlfors extension of a lift."""
    return StripMap(homeo=h, quad_order=quad_order)


def default_fd_step(y) -> np.ndarray:
    """Finite-difference step for the differential at height y.

    Inside the integral layer the step follows 1e-5 * max(1, y) capped at
    y/20 so the stencil stays inside the half-plane; in the closed-form
    layers (y > 1) a larger step is used, where truncation vanishes and
    a larger step only reduces rounding noise.
    """
    y = np.asarray(y, dtype=float)
    step = np.minimum(1e-5 * np.maximum(1.0, y), y / 20.0)
    return np.where(y > 1.0, np.minimum(0.05, y / 20.0), step)


def _fd_partials(H: StripMap, z, step):
    """4-point central differences of H in x and y, vectorized."""
    s = step
    dx = (8.0 * (H(z + s) - H(z - s)) - (H(z + 2.0 * s) - H(z - 2.0 * s))) / (12.0 * s)
    dy = (
        8.0 * (H(z + 1j * s) - H(z - 1j * s)) - (H(z + 2j * s) - H(z - 2j * s))
    ) / (12.0 * s)
    return dx, dy


def ba_differential(H: StripMap, z: complex, step: float | None = None) -> np.ndarray:
    """Differential DH at z as a 2x2 real matrix, by central differences."""
    z = complex(z)
    y = z.imag
    if y <= 0.0:
        raise ValueError("differential requires Im z > 0")
    if step is None:
        step = float(default_fd_step(y))
    if step > y / 10.0:
        raise ValueError("step violates half-plane margin")
    dx, dy = _fd_partials(H, np.asarray([z]), np.asarray([step]))
    return np.array([[dx[0].real, dy[0].real], [dx[0].imag, dy[0].imag]])


def _distortion_from_partials(dx, dy):
    """Pointwise K = ||DH||^2 / J from the complex partials.

    Uses the closed-form singular values of the 2x2 matrix
    [[Re dx, Re dy], [Im dx, Im dy]]: K = sigma_max / sigma_min.
    """
    a = 0.5 * (dx.real + dy.imag)
    b = 0.5 * (dx.real - dy.imag)
    c = 0.5 * (dx.imag + dy.real)
    d = 0.5 * (dx.imag - dy.real)
    big = np.hypot(a, d)
    small = np.hypot(b, c)
    smin = big - small
    if np.any(smin <= 0.0):
        raise RuntimeError("orientation violation")
    return (big + small) / smin


def distortion_field(H: StripMap, z, step=None, method: str = "window") -> np.ndarray:
    """K_H at an array of strip points with Im z >= the near-boundary floor.

    The default uses the exact window-difference partials; finite
    differences (``method="fd"``) remain available as a cross-check but
    degenerate on rays where the lift has a kink, so they are not used
    for field evaluation.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    y = z.imag
    if np.any(y < _NEAR_BOUNDARY_FLOOR):
        raise ValueError("distortion queries require Im z >= 1e-6")
    if method == "window":
        dx, dy = H.partials(z)
    elif method == "fd":
        if step is None:
            step = default_fd_step(y)
        else:
            step = np.broadcast_to(np.asarray(step, dtype=float), z.shape)
            if np.any(step > y / 10.0):
                raise ValueError("step violates half-plane margin")
        dx, dy = _fd_partials(H, z, step)
    else:
        raise ValueError("method must be 'window' or 'fd'")
    return _distortion_from_partials(dx, dy)


def distortion_at(H: StripMap, z: complex, step: float | None = None,
                  method: str = "window") -> float:
    """Pointwise distortion K_H(z) = ||DH(z)||^2 / J_H(z), always >= 1."""
    return float(distortion_field(H, np.asarray([complex(z)]), step, method)[0])
