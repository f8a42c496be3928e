"""Synthetic study areas, routes and fading for tests and demos."""

from __future__ import annotations

import math

import numpy as np

from .geo import GeoPoint, RasterGrid, enu_to_latlon
from .propagation import ClutterClass, clutter_table

SYDNEY = GeoPoint(-33.80, 151.00)

DEFAULT_CLUTTER = (
    ClutterClass(1, "open", 0.0, 0.0, 10.0),
    ClutterClass(2, "residential", 6.0, 8.0, 14.0),
    ClutterClass(3, "trees", 8.0, 12.0, 12.0),
    ClutterClass(4, "industrial", 10.0, 15.0, 18.0),
)


def default_clutter_table():
    return clutter_table(DEFAULT_CLUTTER)


def flat_area(nrows: int, ncols: int, cell_size: float = 2.0, origin: GeoPoint = SYDNEY,
              elevation: float = 50.0, clutter_id: int = 1):
    """Flat DTM and uniform clutter raster sharing one extent."""
    dtm = RasterGrid(origin, cell_size, np.full((nrows, ncols), float(elevation)))
    clutter = RasterGrid(origin, cell_size, np.full((nrows, ncols), float(clutter_id)))
    return dtm, clutter


def striped_clutter(like: RasterGrid, ids=(1, 2, 3), stripe_cells: int = 8) -> RasterGrid:
    """Vertical stripes cycling through ``ids``."""
    cols = np.arange(like.ncols) // stripe_cells
    row = np.asarray(ids, dtype=float)[cols % len(ids)]
    return like.with_values(np.tile(row, (like.nrows, 1)))


def rolling_terrain(nrows: int, ncols: int, cell_size: float = 2.0, origin: GeoPoint = SYDNEY,
                    low: float = 50.69, high: float = 125.65, seed: int = 0) -> RasterGrid:
    """Smooth random terrain spanning ``low`` to ``high`` meters."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:nrows, 0:ncols] / max(nrows, ncols)
    z = np.zeros((nrows, ncols))
    for _ in range(6):
        kx, ky = rng.uniform(0.5, 3.0, 2)
        z += rng.uniform(0.5, 1.0) * np.sin(2 * math.pi * (kx * x + rng.uniform()) ) \
            * np.cos(2 * math.pi * (ky * y + rng.uniform()))
    z = (z - z.min()) / (z.max() - z.min())
    return RasterGrid(origin, cell_size, low + (high - low) * z)


def rayleigh_amplitude(n: int, rng: np.random.Generator) -> np.ndarray:
    """Independent Rayleigh envelope samples scaled to unit mean."""
    sigma = math.sqrt(2.0 / math.pi)
    return np.hypot(rng.normal(0.0, sigma, n), rng.normal(0.0, sigma, n))


def polyline_xy(vertices, spacing: float):
    """Points every ``spacing`` meters along a polyline given in local x/y.

    Returns ``(x, y, distance)``; the last vertex is included only when it
    falls on the spacing grid.
    """
    v = np.asarray(vertices, dtype=float)
    seg = np.hypot(*np.diff(v, axis=0).T)
    cum = np.r_[0.0, np.cumsum(seg)]
    s = spacing * np.arange(int(math.floor(cum[-1] / spacing + 1e-9)) + 1)
    return np.interp(s, cum, v[:, 0]), np.interp(s, cum, v[:, 1]), s


def route_latlon(origin: GeoPoint, vertices, spacing: float):
    """Like :func:`polyline_xy` but returns ``(lat, lon, x, y)``."""
    x, y, _ = polyline_xy(vertices, spacing)
    lat, lon = enu_to_latlon(origin, x, y)
    return lat, lon, x, y
