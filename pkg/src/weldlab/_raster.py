"""Grid rasterization and connectivity helpers shared by the geometry modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import shapely
import scipy.ndimage as ndi
from shapely.geometry import Polygon

_EIGHT = np.ones((3, 3), dtype=int)


@dataclass
class Raster:
    """Boolean occupancy grid over an axis-aligned window.

    ``mask[ix, iy]`` covers the cell with center
    (x0 + (ix+1/2) h, y0 + (iy+1/2) h).
    """

    mask: np.ndarray
    x0: float
    y0: float
    h: float

    def cell_of(self, point) -> tuple[int, int]:
        ix = int(np.floor((point[0] - self.x0) / self.h))
        iy = int(np.floor((point[1] - self.y0) / self.h))
        if not (0 <= ix < self.mask.shape[0] and 0 <= iy < self.mask.shape[1]):
            raise ValueError("point outside raster window")
        return ix, iy

    def centers(self):
        nx, ny = self.mask.shape
        xs = self.x0 + (np.arange(nx) + 0.5) * self.h
        ys = self.y0 + (np.arange(ny) + 0.5) * self.h
        return xs, ys

    def ball_mask(self, center, radius) -> np.ndarray:
        xs, ys = self.centers()
        dx = xs[:, None] - center[0]
        dy = ys[None, :] - center[1]
        return dx * dx + dy * dy <= radius * radius


def rasterize_polygon(vertices: np.ndarray, window, n: int, inside: bool = True) -> Raster:
    """Mark cells whose center lies inside (or outside) the polygon.

    ``window`` is (xmin, xmax, ymin, ymax); cells are square with side
    h = max(extent)/n, so the realized grid may be rectangular.
    """
    xmin, xmax, ymin, ymax = window
    h = max(xmax - xmin, ymax - ymin) / n
    nx = max(2, int(np.ceil((xmax - xmin) / h)))
    ny = max(2, int(np.ceil((ymax - ymin) / h)))
    xs = xmin + (np.arange(nx) + 0.5) * h
    ys = ymin + (np.arange(ny) + 0.5) * h
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    poly = Polygon(vertices)
    mask = shapely.contains_xy(poly, xx.ravel(), yy.ravel()).reshape(nx, ny)
    if not inside:
        mask = ~mask
    return Raster(mask=mask, x0=xmin, y0=ymin, h=h)


def same_component(mask: np.ndarray, a: tuple[int, int], b: tuple[int, int]) -> bool:
    """8-connected joinability of two cells inside the mask."""
    if not (mask[a] and mask[b]):
        return False
    labels, _ = ndi.label(mask, structure=_EIGHT)
    return labels[a] == labels[b]


def component_count(mask: np.ndarray) -> int:
    return int(ndi.label(mask, structure=_EIGHT)[1])
