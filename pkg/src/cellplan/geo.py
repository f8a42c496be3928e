"""Geodetic and raster primitives.

Everything here works on a spherical Earth of radius 6,371 km, which is
plenty at drive-test scale. Rasters are georeferenced by the lat/lon of
their lower-left corner with a cell size in meters; positions inside a
raster are resolved through a local equirectangular projection anchored at
that corner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
#: maximum latitude/longitude separation accepted by the local projection
LOCAL_LIMIT_DEG = 1.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude out of range: {self.lat}")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class EnuPoint:
    """Local east/north offset in meters."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("EnuPoint coordinates must be finite")

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def haversine_array(lat1, lon1, lat2, lon2):
    """Vectorised haversine; arguments in degrees, result in meters."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def _wrap_dlon(dlon: float) -> float:
    return (dlon + 180.0) % 360.0 - 180.0


def geo_to_enu(origin: GeoPoint, p: GeoPoint) -> EnuPoint:
    """Equirectangular projection of ``p`` around ``origin``.

    Raises
    ------
    ValueError
        If ``p`` is more than one degree away from ``origin`` on either axis.
    """
    dlat = p.lat - origin.lat
    dlon = _wrap_dlon(p.lon - origin.lon)
    if abs(dlat) >= LOCAL_LIMIT_DEG or abs(dlon) >= LOCAL_LIMIT_DEG:
        raise ValueError(
            f"point ({p.lat}, {p.lon}) is beyond the {LOCAL_LIMIT_DEG} degree "
            f"locality bound of origin ({origin.lat}, {origin.lon})"
        )
    x = EARTH_RADIUS_M * math.radians(dlon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * math.radians(dlat)
    return EnuPoint(x, y)


def enu_to_geo(origin: GeoPoint, e: EnuPoint) -> GeoPoint:
    """Inverse of :func:`geo_to_enu`."""
    lat, lon = enu_to_latlon(origin, e.x, e.y)
    return GeoPoint(float(lat), float(lon))


def latlon_to_xy(origin: GeoPoint, lat, lon):
    """Array form of :func:`geo_to_enu` without the locality check."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    dlon = (lon - origin.lon + 180.0) % 360.0 - 180.0
    x = EARTH_RADIUS_M * np.radians(dlon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * np.radians(lat - origin.lat)
    return x, y


def enu_to_latlon(origin: GeoPoint, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lat = origin.lat + np.degrees(y / EARTH_RADIUS_M)
    lon = origin.lon + np.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat))))
    return lat, lon


# --------------------------------------------------------------------------
# Raster grids
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RasterGrid:
    """A north-up raster.

    ``values`` has shape ``(nrows, ncols)`` and is stored in file order:
    row 0 is the northernmost row, column 0 the westernmost column.
    """

    origin: GeoPoint
    cell_size: float
    values: np.ndarray
    nodata: float = -9999.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ValueError(f"raster values must be a non-empty 2-D array, got shape {vals.shape}")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    @property
    def width_m(self) -> float:
        return self.ncols * self.cell_size

    @property
    def height_m(self) -> float:
        return self.nrows * self.cell_size

    def same_extent(self, other: "RasterGrid") -> bool:
        return (
            self.origin == other.origin
            and self.cell_size == other.cell_size
            and self.values.shape == other.values.shape
        )

    def with_values(self, values, nodata: float | None = None) -> "RasterGrid":
        return RasterGrid(self.origin, self.cell_size, values,
                          self.nodata if nodata is None else nodata)

    def cell_centers_xy(self):
        """Local east/north coordinates of every cell center, shape (nrows, ncols)."""
        cols = (np.arange(self.ncols) + 0.5) * self.cell_size
        rows_from_south = (np.arange(self.nrows)[::-1] + 0.5) * self.cell_size
        return np.meshgrid(cols, rows_from_south)

    def cell_center(self, row: int, col: int) -> GeoPoint:
        x = (col + 0.5) * self.cell_size
        y = (self.nrows - 1 - row + 0.5) * self.cell_size
        return enu_to_geo(self.origin, EnuPoint(x, y))

    def index_xy(self, x, y):
        """Map local coordinates to (row, col, inside) arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        col = np.floor(x / self.cell_size).astype(np.int64)
        row_s = np.floor(y / self.cell_size).astype(np.int64)
        inside = (col >= 0) & (col < self.ncols) & (row_s >= 0) & (row_s < self.nrows)
        row = self.nrows - 1 - row_s
        return np.clip(row, 0, self.nrows - 1), np.clip(col, 0, self.ncols - 1), inside

    def sample_xy(self, x, y):
        """Nearest-cell values at local coordinates; nodata outside the extent."""
        row, col, inside = self.index_xy(x, y)
        return np.where(inside, self.values[row, col], self.nodata)

    def is_nodata(self, v):
        v = np.asarray(v)
        if math.isnan(self.nodata):
            return np.isnan(v)
        return v == self.nodata


def raster_lookup(grid: RasterGrid, p: GeoPoint) -> float:
    """Value of the cell containing ``p``; ``grid.nodata`` when outside."""
    try:
        e = geo_to_enu(grid.origin, p)
    except ValueError:
        return grid.nodata
    return float(grid.sample_xy(e.x, e.y))


class AsciiGridError(ValueError):
    """Malformed ESRI ASCII grid input."""

    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if lineno is not None:
            where += f"line {lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value")


def parse_ascii_grid(text: str, source: str | None = None) -> RasterGrid:
    """Parse ESRI ASCII grid text.

    ``xllcorner``/``yllcorner`` carry the longitude/latitude of the lower-left
    corner and ``cellsize`` is in meters. ``NODATA_value`` is optional and
    defaults to -9999.
    """
    lines = text.splitlines()
    header: dict[str, str] = {}
    lineno = 0
    while lineno < len(lines):
        raw = lines[lineno].strip()
        if not raw:
            lineno += 1
            continue
        parts = raw.split()
        key = parts[0].lower()
        if key[0].isdigit() or key[0] in "+-.":
            break
        if key not in _HEADER_KEYS:
            raise AsciiGridError(f"unknown header key {parts[0]!r}", lineno + 1, source)
        if len(parts) != 2:
            raise AsciiGridError(f"header line for {parts[0]!r} must have exactly one value",
                                 lineno + 1, source)
        if key in header:
            raise AsciiGridError(f"duplicate header key {parts[0]!r}", lineno + 1, source)
        header[key] = parts[1]
        lineno += 1
    header_end = lineno

    for key in _HEADER_KEYS[:5]:
        if key not in header:
            raise AsciiGridError(f"missing header key {key!r}", header_end + 1, source)

    def _num(key, conv):
        try:
            return conv(header[key])
        except ValueError:
            idx = next(i for i, ln in enumerate(lines) if ln.strip().lower().startswith(key))
            raise AsciiGridError(f"bad value {header[key]!r} for {key}", idx + 1, source) from None

    ncols = _num("ncols", int)
    nrows = _num("nrows", int)
    lon0 = _num("xllcorner", float)
    lat0 = _num("yllcorner", float)
    cell = _num("cellsize", float)
    nodata = _num("nodata_value", float) if "nodata_value" in header else -9999.0
    if ncols <= 0 or nrows <= 0:
        raise AsciiGridError(f"ncols and nrows must be positive, got {ncols}x{nrows}", None, source)
    if not cell > 0:
        raise AsciiGridError(f"cellsize must be positive, got {cell}", None, source)

    values = []
    for i in range(header_end, len(lines)):
        for tok in lines[i].split():
            try:
                values.append(float(tok))
            except ValueError:
                raise AsciiGridError(f"non-numeric value {tok!r}", i + 1, source) from None
    expected = ncols * nrows
    if len(values) != expected:
        diff = expected - len(values)
        what = f"short by {diff}" if diff > 0 else f"{-diff} too many"
        raise AsciiGridError(
            f"header declares {expected} values ({ncols}x{nrows}) but {len(values)} present ({what})",
            len(lines), source,
        )
    try:
        origin = GeoPoint(lat0, lon0)
    except ValueError as exc:
        raise AsciiGridError(str(exc), None, source) from None
    return RasterGrid(origin, cell, np.array(values).reshape(nrows, ncols), nodata)


def format_number(v: float) -> str:
    """Shortest text that parses back to exactly ``v``."""
    v = float(v)
    if v.is_integer() and abs(v) < 1e16 and not (v == 0 and math.copysign(1, v) < 0):
        return str(int(v))
    return repr(v)


def write_ascii_grid(grid: RasterGrid) -> str:
    out = [
        f"ncols {grid.ncols}",
        f"nrows {grid.nrows}",
        f"xllcorner {format_number(grid.origin.lon)}",
        f"yllcorner {format_number(grid.origin.lat)}",
        f"cellsize {format_number(grid.cell_size)}",
        f"NODATA_value {format_number(grid.nodata)}",
    ]
    for row in grid.values:
        out.append(" ".join(format_number(v) for v in row))
    return "\n".join(out) + "\n"


def grids_equal(a: RasterGrid, b: RasterGrid) -> bool:
    """Bit-exact equality of header fields and values (NaN-aware)."""
    if not a.same_extent(b):
        return False
    same_nodata = (a.nodata == b.nodata) or (math.isnan(a.nodata) and math.isnan(b.nodata))
    return same_nodata and a.values.tobytes() == b.values.tobytes()


# --------------------------------------------------------------------------
# Routes
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Route:
    points: tuple[GeoPoint, ...]
    cumulative_m: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if len(self.points) != len(self.cumulative_m):
            raise ValueError("points and cumulative_m lengths differ")
        if self.cumulative_m and self.cumulative_m[0] != 0:
            raise ValueError("cumulative distance must start at 0")
        if any(b < a for a, b in zip(self.cumulative_m, self.cumulative_m[1:])):
            raise ValueError("cumulative distance must be nondecreasing")

    @property
    def length_m(self) -> float:
        return self.cumulative_m[-1] if self.cumulative_m else 0.0

    def __len__(self):
        return len(self.points)


def cumulative_route_distance(points: Iterable[GeoPoint] | Sequence[GeoPoint]) -> Route:
    pts = tuple(points)
    if not pts:
        raise ValueError("route needs at least one point")
    cum = [0.0]
    for a, b in zip(pts, pts[1:]):
        cum.append(cum[-1] + haversine_distance(a, b))
    return Route(pts, tuple(cum))
