"""Global plane extension of a conformal welding.

Given a welding G (a circle homeomorphism with lift h), the extension
uses log coordinates: with omega = arg(z)/2pi + i*|log|z||/(2pi) the map
is exp(2 pi i Re w) * exp(+-2 pi Im w) for w = H(omega), where H is the
Beurling-Ahlfors extension of h and the sign mirrors the interior and
exterior of the unit circle into each other.  Because H is the identity
for Im >= 2, the map is the identity outside the annulus
delta <= |z| <= 1/delta with delta = e^{-4 pi}, and the inversion
z -> 1/conj(z) is anti-conformal, so the distortion field satisfies
K(z) = K_H(omega) on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ba_extension import StripMap, ba_extend, distortion_field
from .circle_homeo import CircleHomeo, rho

DELTA = math.exp(-4.0 * math.pi)
TWO_PI = 2.0 * math.pi


@dataclass
class PlaneMapField:
    """A sampled plane homeomorphism extending a welding, with K queries."""

    strip: StripMap
    delta: float = DELTA
    cache: dict = field(default_factory=dict)

    @property
    def homeo(self) -> CircleHomeo:
        return self.strip.homeo

    def __call__(self, z):
        return evaluate_welding(self, z)

    def distortion(self, z):
        return welding_distortion(self, z)


def _strip_coordinate(z):
    """omega in the closed strip: Re in [0,1), Im = |log r| / 2pi."""
    r = np.abs(z)
    theta = np.mod(np.angle(z), TWO_PI)
    height = np.full(r.shape, np.inf)
    pos = r > 0.0
    height[pos] = np.abs(np.log(r[pos])) / TWO_PI
    return theta / TWO_PI + 1j * height, r


def extend_welding(G: CircleHomeo, quad_order: int = 64) -> PlaneMapField:
    """Assemble the global extension of a welding.

    Probes translation commutation of the strip map across the branch
    cut at construction; a defective lift raises RuntimeError.
    """
    strip = ba_extend(G, quad_order=quad_order)
    ys = np.array([0.05, 0.2, 0.5, 0.9, 1.5])
    left = strip(1j * ys) + 1.0
    right = strip(1.0 + 1j * ys)
    if np.max(np.abs(left - right)) > 1e-8:
        raise RuntimeError("translation-commutation violated")
    return PlaneMapField(strip=strip)


def evaluate_welding(F: PlaneMapField, z):
    """Evaluate the extension at complex z (scalar or array)."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    out = z.copy()  # identity branches keep the input bit-exactly

    omega, r = _strip_coordinate(z)
    active = (omega.imag < 2.0) & (r > 0.0)
    if np.any(active):
        w = F.strip(omega[active])
        sign = np.where(r[active] > 1.0, 1.0, -1.0)
        out[active] = np.exp(2j * math.pi * w.real) * np.exp(sign * TWO_PI * w.imag)
    return complex(out[0]) if scalar else out


def welding_distortion(F: PlaneMapField, z):
    """Pointwise distortion of the extension; exactly 1 in the identity region.

    The inversion is anti-conformal and the log/exp factors are
    conformal, so this is K_H at the strip coordinate.  Points with
    | log|z| | / 2pi below the near-boundary floor are rejected.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    omega, r = _strip_coordinate(z)
    out = np.ones(z.shape)
    active = (omega.imag < 2.0) & (r > 0.0)
    if np.any(active):
        out[active] = distortion_field(F.strip, omega[active])
    return float(out[0]) if scalar else out


def verify_scalewise_bound(F: PlaneMapField, radii, theta_samples: int = 512) -> dict:
    """Per-shell ratio of max K to the scalewise distortion rho_G(log r).

    For each radius r > 1 this computes max_theta K(r e^{i theta}) over a
    uniform grid containing theta = 0 and the welding's rho at t = log r,
    and reports the ratio series with its sup/inf.  The contract is
    boundedness of the series, not any particular constant.
    """
    radii = np.sort(np.asarray(radii, dtype=float))
    if np.any(radii <= 1.0) or np.any(radii >= 1.0 / F.delta):
        raise ValueError("radii must lie in (1, 1/delta)")
    if np.any(np.log(radii) >= math.pi / 2.0):
        raise ValueError("log r must stay below pi/2 for the scalewise profile")
    thetas = np.linspace(0.0, TWO_PI, theta_samples, endpoint=False)
    k_max, rho_vals = [], []
    for r in radii:
        zs = r * np.exp(1j * thetas)
        k_max.append(float(np.max(welding_distortion(F, zs))))
        rho_vals.append(rho(F.homeo, float(np.log(r)), theta_samples)[0])
    k_max = np.array(k_max)
    rho_vals = np.array(rho_vals)
    ratio = k_max / rho_vals
    return {
        "radii": radii.tolist(),
        "k_max": k_max.tolist(),
        "rho": rho_vals.tolist(),
        "ratio": ratio.tolist(),
        "ratio_sup": float(np.max(ratio)),
        "ratio_inf": float(np.min(ratio)),
        "spread": float(np.max(ratio) / np.min(ratio)),
        "theta_samples": int(theta_samples),
    }


def field_grid(
    F: PlaneMapField,
    n_r: int = 128,
    n_theta: int = 128,
    r_lo: float | None = None,
    r_hi: float | None = None,
    keep: bool = False,
):
    """Sample (z, G_hat(z), K(z)) on a log-radial polar grid.

    Returns (z, image, K) as flat arrays; with ``keep`` the result is
    stored on the field's cache (an optimization only, never consulted
    for correctness).
    """
    r_lo = 1.0 + 2.0 ** -8 if r_lo is None else r_lo
    r_hi = math.exp(math.pi) if r_hi is None else r_hi
    rs = np.exp(np.linspace(math.log(r_lo), math.log(r_hi), n_r))
    thetas = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    rr, tt = np.meshgrid(rs, thetas, indexing="ij")
    z = (rr * np.exp(1j * tt)).ravel()
    image = evaluate_welding(F, z)
    kvals = welding_distortion(F, z)
    if keep:
        F.cache["grid"] = (z, image, kvals)
    return z, image, kvals
