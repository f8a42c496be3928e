"""NRSRP coverage prediction for beam-swept gNodeB sectors.

The propagation model is an urban-macro style log-distance path loss with a
LOS/NLOS switch decided by casting a straight ray from the antenna to the UE
over terrain plus clutter heights, and per-clutter additive losses on top.
Each sector radiates eight SSB beams; a pixel's NRSRP is that of its best
beam across all sectors.

All geometry is done in a local east/north frame anchored at the lower-left
corner of the study-area rasters.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .geo import GeoPoint, RasterGrid, geo_to_enu, latlon_to_xy
from .radio import CarrierConfig

UE_HEIGHT_M = 1.5
BEAM_COUNT = 8
NODATA = -9999.0
#: rows per work unit; fixed so results never depend on the thread count
BLOCK_ROWS = 16


# --------------------------------------------------------------------------
# Path loss
# --------------------------------------------------------------------------


def free_space_path_loss(distance_m, freq_mhz):
    d = np.asarray(distance_m, dtype=float)
    return 20.0 * np.log10(d) + 20.0 * np.log10(freq_mhz) - 27.55


def path_loss(distance_3d, carrier_freq: float, h_bs: float, h_ut: float, los, *,
              full_output: bool = False):
    """Urban-macro style path loss in dB.

    LOS is ``28.0 + 22 log10(d) + 20 log10(f_GHz)``; NLOS is the larger of
    the LOS value and ``13.54 + 39.08 log10(d) + 20 log10(f_GHz) - 0.6 (h_ut - 1.5)``.
    The result is floored at free-space loss minus 1 dB. Distances below 1 m
    are clamped to 1 m.

    Parameters
    ----------
    distance_3d : float or array
        Antenna-to-UE distance in meters.
    carrier_freq : float
        Frequency in MHz.
    h_bs, h_ut : float
        Antenna and UE heights above ground in meters.
    los : bool or bool array
    full_output : bool
        Also return a boolean (array) flagging clamped distances.
    """
    if not (h_bs > 0 and np.all(np.asarray(h_ut) > 0)):
        raise ValueError("antenna and UE heights must be positive")
    d = np.asarray(distance_3d, dtype=float)
    clamped = d < 1.0
    d = np.maximum(d, 1.0)
    logf = 20.0 * math.log10(carrier_freq / 1000.0)
    logd = np.log10(d)
    pl_los = 28.0 + 22.0 * logd + logf
    pl_nlos = np.maximum(pl_los, 13.54 + 39.08 * logd + logf - 0.6 * (np.asarray(h_ut) - 1.5))
    pl = np.where(los, pl_los, pl_nlos)
    pl = np.maximum(pl, free_space_path_loss(d, carrier_freq) - 1.0)
    if pl.ndim == 0:
        pl = float(pl)
        clamped = bool(clamped)
    return (pl, clamped) if full_output else pl


# --------------------------------------------------------------------------
# Antennas
# --------------------------------------------------------------------------


def _even_boresights(envelope: float, count: int) -> tuple[float, ...]:
    spacing = envelope / count
    return tuple(-envelope / 2 + spacing * (i + 0.5) for i in range(count))


@dataclass(frozen=True)
class BeamSet:
    """Eight SSB beams with identical patterns.

    ``boresights`` are azimuth offsets from the sector azimuth, in degrees.
    The default spreads the beams across a 120 degree envelope, 15 degrees
    apart. Degenerate sets with repeated boresights are accepted.
    """

    boresights: tuple[float, ...] = _even_boresights(120.0, BEAM_COUNT)
    az_beamwidth: float = 15.0
    el_beamwidth: float = 10.0
    peak_gain: float = 17.0
    max_attenuation: float = 30.0

    def __post_init__(self):
        b = tuple(float(v) for v in self.boresights)
        object.__setattr__(self, "boresights", b)
        if len(b) != BEAM_COUNT:
            raise ValueError(f"a beam set has exactly {BEAM_COUNT} beams, got {len(b)}")
        if any(y < x for x, y in zip(b, b[1:])):
            raise ValueError("beam boresights must be sorted by index")
        if any(abs(x + y) > 1e-9 for x, y in zip(b, b[::-1])):
            raise ValueError("beam boresights must be symmetric about the sector azimuth")
        if not (self.az_beamwidth > 0 and self.el_beamwidth > 0):
            raise ValueError("beamwidths must be positive")
        if self.max_attenuation < 0:
            raise ValueError("max_attenuation must be nonnegative")

    @classmethod
    def evenly_spaced(cls, envelope: float = 120.0, **kw) -> "BeamSet":
        return cls(boresights=_even_boresights(envelope, BEAM_COUNT), **kw)

    @classmethod
    def from_dict(cls, d: Mapping) -> "BeamSet":
        kw = {k: float(d[k]) for k in ("az_beamwidth", "el_beamwidth", "peak_gain", "max_attenuation")
              if k in d}
        if "boresights" in d:
            return cls(boresights=tuple(d["boresights"]), **kw)
        return cls.evenly_spaced(float(d.get("envelope", 120.0)), **kw)

    def to_dict(self) -> dict:
        return {
            "boresights": list(self.boresights),
            "az_beamwidth": self.az_beamwidth,
            "el_beamwidth": self.el_beamwidth,
            "peak_gain": self.peak_gain,
            "max_attenuation": self.max_attenuation,
        }

    def pattern(self, az_offset, el_offset):
        """Gain of every beam, shape ``(8,) + shape(az_offset)``.

        ``az_offset`` is measured from the sector azimuth; ``el_offset`` from
        the tilted electrical boresight.
        """
        az = np.asarray(az_offset, dtype=float)
        el = np.asarray(el_offset, dtype=float)
        bores = np.asarray(self.boresights).reshape((-1,) + (1,) * az.ndim)
        daz = _wrap180(az[None, ...] - bores)
        a_h = np.minimum(12.0 * (daz / self.az_beamwidth) ** 2, self.max_attenuation)
        a_v = np.minimum(12.0 * (el / self.el_beamwidth) ** 2, self.max_attenuation)
        return self.peak_gain - a_h - a_v[None, ...]


def _wrap180(a):
    return (np.asarray(a) + 180.0) % 360.0 - 180.0


def beam_gain(beams: BeamSet, beam_idx: int, az_offset: float, el_offset: float,
              tilt: float = 0.0) -> float:
    """Gain in dBi of one beam.

    ``az_offset`` is the horizontal angle from the sector azimuth and
    ``el_offset`` the depression angle below horizontal, both in degrees;
    ``tilt`` is the total (electrical plus mechanical) downtilt.
    """
    if int(beam_idx) != beam_idx or not 0 <= beam_idx < BEAM_COUNT:
        raise ValueError(f"beam index must be in 0..{BEAM_COUNT - 1}, got {beam_idx}")
    daz = float(_wrap180(az_offset - beams.boresights[int(beam_idx)]))
    a_h = min(12.0 * (daz / beams.az_beamwidth) ** 2, beams.max_attenuation)
    a_v = min(12.0 * ((el_offset - tilt) / beams.el_beamwidth) ** 2, beams.max_attenuation)
    return beams.peak_gain - a_h - a_v


@dataclass(frozen=True)
class Sector:
    site_position: GeoPoint
    acl_height: float = 27.77
    azimuth: float = 0.0
    electrical_tilt: float = 3.0
    mechanical_tilt: float = 0.0
    tx_power_per_beam: float = 46.0
    beams: BeamSet = field(default_factory=BeamSet)
    #: site ground elevation; looked up in the DTM when None
    ground_elevation: float | None = None
    name: str = ""

    def __post_init__(self):
        if not self.acl_height > 0:
            raise ValueError(f"acl_height must be positive, got {self.acl_height}")
        if not 0.0 <= self.azimuth < 360.0:
            raise ValueError(f"azimuth must lie in [0, 360), got {self.azimuth}")
        for label, t in (("electrical_tilt", self.electrical_tilt), ("mechanical_tilt", self.mechanical_tilt)):
            if not -15.0 <= t <= 15.0:
                raise ValueError(f"{label} must lie in [-15, 15], got {t}")

    @property
    def total_tilt(self) -> float:
        return self.electrical_tilt + self.mechanical_tilt

    @classmethod
    def from_dict(cls, d: Mapping) -> "Sector":
        site = d["site"] if "site" in d else d
        return cls(
            site_position=GeoPoint(float(site["lat"]), float(site["lon"])),
            acl_height=float(d.get("acl_height", 27.77)),
            azimuth=float(d.get("azimuth", 0.0)),
            electrical_tilt=float(d.get("electrical_tilt", 3.0)),
            mechanical_tilt=float(d.get("mechanical_tilt", 0.0)),
            tx_power_per_beam=float(d.get("tx_power_per_beam", 46.0)),
            beams=BeamSet.from_dict(d.get("beams", {})),
            ground_elevation=(None if d.get("ground_elevation") is None else float(d["ground_elevation"])),
            name=str(d.get("name", "")),
        )


@dataclass(frozen=True)
class ClutterClass:
    id: int
    name: str
    extra_loss: float
    representative_height: float = 0.0
    indoor_extra_loss: float = 0.0

    def __post_init__(self):
        if self.extra_loss < 0:
            raise ValueError(f"clutter class {self.id}: extra_loss must be nonnegative")
        if self.indoor_extra_loss < 0:
            raise ValueError(f"clutter class {self.id}: indoor_extra_loss must be nonnegative")
        if self.representative_height < 0:
            raise ValueError(f"clutter class {self.id}: representative_height must be nonnegative")

    @classmethod
    def from_dict(cls, d: Mapping) -> "ClutterClass":
        return cls(int(d["id"]), str(d.get("name", "")), float(d.get("extra_loss", 0.0)),
                   float(d.get("representative_height", 0.0)), float(d.get("indoor_extra_loss", 0.0)))


ClutterTable = Mapping[int, ClutterClass]

#: used for pixels whose clutter is nodata
OPEN_CLUTTER = ClutterClass(-1, "open", 0.0, 0.0)


def clutter_table(classes: Sequence[ClutterClass]) -> dict[int, ClutterClass]:
    table = {}
    for c in classes:
        if c.id in table:
            raise ValueError(f"duplicate clutter id {c.id}")
        table[c.id] = c
    return table


# --------------------------------------------------------------------------
# Study area
# --------------------------------------------------------------------------


class StudyArea:
    """Terrain and clutter rasters sharing one extent."""

    def __init__(self, dtm: RasterGrid, clutter: RasterGrid, table: ClutterTable):
        if not dtm.same_extent(clutter):
            raise ValueError(
                "DTM and clutter rasters must share origin, cell size and shape "
                f"(dtm {dtm.nrows}x{dtm.ncols} @ {dtm.cell_size} m, "
                f"clutter {clutter.nrows}x{clutter.ncols} @ {clutter.cell_size} m)"
            )
        self.dtm = dtm
        self.clutter = clutter
        self.table = dict(table)
        ids = clutter.values[~clutter.is_nodata(clutter.values)]
        missing = sorted(set(np.unique(ids).tolist()) - set(self.table))
        if missing:
            raise ValueError(f"clutter raster uses ids missing from the clutter table: {missing}")
        self._ids = np.array(sorted(self.table), dtype=float)
        self._loss = np.array([self.table[int(i)].extra_loss for i in self._ids] + [0.0])
        self._indoor = np.array([self.table[int(i)].indoor_extra_loss for i in self._ids] + [0.0])
        self._height = np.array([self.table[int(i)].representative_height for i in self._ids] + [0.0])

    @property
    def origin(self) -> GeoPoint:
        return self.dtm.origin

    @property
    def cell_size(self) -> float:
        return self.dtm.cell_size

    def _class_slot(self, x, y):
        ids = self.clutter.sample_xy(x, y)
        nod = self.clutter.is_nodata(ids)
        slot = np.searchsorted(self._ids, ids)
        slot = np.where(nod, len(self._ids), np.minimum(slot, len(self._ids)))
        return slot

    def ground(self, x, y):
        """Terrain elevation; NaN where the DTM has no data."""
        g = self.dtm.sample_xy(x, y)
        return np.where(self.dtm.is_nodata(g), np.nan, g)

    def clutter_loss(self, x, y, indoor: bool = False):
        slot = self._class_slot(x, y)
        loss = self._loss[slot]
        return loss + self._indoor[slot] if indoor else loss

    def obstruction_height(self, x, y):
        """Terrain plus clutter height; NaN where the DTM has no data."""
        return self.ground(x, y) + self._height[self._class_slot(x, y)]

    def clutter_id(self, x, y):
        slot = self._class_slot(x, y)
        ids = np.append(self._ids, np.nan)
        return ids[slot]

    def line_of_sight(self, sx, sy, s_h, px, py, p_h):
        """True where the straight ray from (sx, sy, s_h) to each pixel clears
        terrain and clutter at every intermediate sample.

        Samples are spaced at most half a cell apart and exclude both end
        points. Each pixel's sample set depends only on its own geometry.
        """
        px = np.asarray(px, dtype=float).ravel()
        py = np.asarray(py, dtype=float).ravel()
        p_h = np.broadcast_to(np.asarray(p_h, dtype=float), px.shape).ravel()
        dx, dy = px - sx, py - sy
        dist = np.hypot(dx, dy)
        step = self.cell_size / 2.0
        n = np.maximum(1, np.ceil(dist / step)).astype(np.int64)
        blocked = np.zeros(px.shape, dtype=bool)
        active = np.nonzero(n > 1)[0]
        k = 1
        while active.size:
            t = k / n[active]
            xs = sx + t * dx[active]
            ys = sy + t * dy[active]
            ray = s_h + t * (p_h[active] - s_h)
            obs = self.obstruction_height(xs, ys)
            hit = obs > ray  # NaN terrain never blocks
            blocked[active[hit]] = True
            k += 1
            keep = (n[active] > k) & ~blocked[active]
            active = active[keep]
        return ~blocked


# --------------------------------------------------------------------------
# Prediction kernels
# --------------------------------------------------------------------------


def _site_geometry(sector: Sector, origin: GeoPoint, area: StudyArea | None):
    e = geo_to_enu(origin, sector.site_position)
    if sector.ground_elevation is not None:
        ground = sector.ground_elevation
    elif area is not None:
        ground = float(area.ground(e.x, e.y))
        if math.isnan(ground):
            raise ValueError(
                f"site {sector.name or sector.site_position} lies outside the DTM; "
                "set ground_elevation explicitly"
            )
    else:
        ground = 0.0
    return e.x, e.y, ground + sector.acl_height


def per_beam_nrsrp(sector: Sector, carrier: CarrierConfig, site_xyz, px, py, p_h, los, loss):
    """NRSRP of each of the eight beams, shape ``(8, N)``.

    ``site_xyz`` is the antenna position in the local frame (height absolute),
    ``p_h`` the absolute UE antenna height, ``loss`` the clutter loss in dB.
    """
    sx, sy, sh = site_xyz
    dx = np.asarray(px, dtype=float) - sx
    dy = np.asarray(py, dtype=float) - sy
    d2 = np.hypot(dx, dy)
    dh = sh - np.asarray(p_h, dtype=float)
    d3 = np.hypot(d2, dh)
    az = np.degrees(np.arctan2(dx, dy))
    depression = np.degrees(np.arctan2(dh, d2))
    gains = sector.beams.pattern(az - sector.azimuth, depression - sector.total_tilt)
    pl = path_loss(d3, carrier.center_freq, sector.acl_height, UE_HEIGHT_M, los)
    return sector.tx_power_per_beam + gains - pl - loss - carrier.per_re_offset_db


def best_beam_nrsrp(sector: Sector, target: GeoPoint, target_ground: float,
                    clutter: ClutterClass, carrier: CarrierConfig,
                    area: StudyArea | None = None, indoor: bool = False) -> tuple[int, float]:
    """Strongest beam at ``target`` and its NRSRP in dBm.

    Without a study area the link is taken as line of sight and the site
    ground as ``sector.ground_elevation`` (0 if unset). Ties go to the lowest
    beam index.
    """
    origin = area.origin if area is not None else sector.site_position
    site = _site_geometry(sector, origin, area)
    e = geo_to_enu(origin, target)
    p_h = target_ground + UE_HEIGHT_M
    if area is None:
        los = True
    else:
        los = bool(area.line_of_sight(site[0], site[1], site[2], e.x, e.y, p_h)[0])
    loss = clutter.extra_loss + (clutter.indoor_extra_loss if indoor else 0.0)
    vals = per_beam_nrsrp(sector, carrier, site, np.array([e.x]), np.array([e.y]),
                          np.array([p_h]), los, loss)[:, 0]
    idx = int(np.argmax(vals))
    return idx, float(vals[idx])


def predict_points(sectors: Sequence[Sector], area: StudyArea, carrier: CarrierConfig,
                   x, y, indoor: bool = False):
    """Best-server NRSRP at local coordinates.

    Returns ``(nrsrp, beam, sector)`` arrays; points without terrain data get
    NaN NRSRP and index -1.
    """
    if not sectors:
        raise ValueError("at least one sector is required")
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    ground = area.ground(x, y)
    valid = ~np.isnan(ground)
    p_h = np.where(valid, ground, 0.0) + UE_HEIGHT_M
    loss = area.clutter_loss(x, y, indoor)

    best = np.full(x.shape, -np.inf)
    beam = np.full(x.shape, -1, dtype=np.int64)
    owner = np.full(x.shape, -1, dtype=np.int64)
    for s_idx, sector in enumerate(sectors):
        site = _site_geometry(sector, area.origin, area)
        los = area.line_of_sight(site[0], site[1], site[2], x, y, p_h)
        vals = per_beam_nrsrp(sector, carrier, site, x, y, p_h, los, loss)
        b = np.argmax(vals, axis=0)
        v = np.take_along_axis(vals, b[None, :], axis=0)[0]
        better = v > best
        best = np.where(better, v, best)
        beam = np.where(better, b, beam)
        owner = np.where(better, s_idx, owner)
    best = np.where(valid, best, np.nan)
    beam = np.where(valid, beam, -1)
    owner = np.where(valid, owner, -1)
    return best, beam, owner


@dataclass(frozen=True, eq=False)
class CoverageMap:
    nrsrp: RasterGrid
    best_beam: RasterGrid
    best_sector: RasterGrid | None = None

    def __post_init__(self):
        if not self.nrsrp.same_extent(self.best_beam):
            raise ValueError("coverage grids must share extent and resolution")


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("CELLPLAN_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def predict_coverage(sectors: Sequence[Sector], dtm: RasterGrid, clutter_raster: RasterGrid,
                     clutter_table: ClutterTable, carrier: CarrierConfig, *,
                     indoor: bool = False, threads: int | None = None) -> CoverageMap:
    """Predict best-server NRSRP and best beam for every pixel.

    The UE sits 1.5 m above the DTM. Work is split into fixed blocks of rows
    so the output is bit-identical for any ``threads`` value (``None`` reads
    ``CELLPLAN_THREADS``; 0 means one thread per CPU).
    """
    if not sectors:
        raise ValueError("at least one sector is required")
    area = StudyArea(dtm, clutter_raster, clutter_table)
    xs, ys = dtm.cell_centers_xy()
    nrsrp = np.empty(xs.shape)
    beam = np.empty(xs.shape)
    owner = np.empty(xs.shape)

    def work(r0):
        r1 = min(r0 + BLOCK_ROWS, dtm.nrows)
        v, b, s = predict_points(sectors, area, carrier, xs[r0:r1], ys[r0:r1], indoor)
        shape = (r1 - r0, dtm.ncols)
        nrsrp[r0:r1] = np.where(np.isnan(v), NODATA, v).reshape(shape)
        beam[r0:r1] = np.where(b < 0, NODATA, b).reshape(shape)
        owner[r0:r1] = np.where(s < 0, NODATA, s).reshape(shape)

    starts = range(0, dtm.nrows, BLOCK_ROWS)
    n_threads = min(_resolve_threads(threads), len(starts))
    if n_threads == 1:
        for r0 in starts:
            work(r0)
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            list(pool.map(work, starts))

    mk = lambda a: RasterGrid(dtm.origin, dtm.cell_size, a, NODATA)  # noqa: E731
    return CoverageMap(mk(nrsrp), mk(beam), mk(owner))


def sample_coverage(cmap: CoverageMap, lat, lon):
    """Nearest-cell NRSRP at arrays of positions; NaN outside or on nodata."""
    x, y = latlon_to_xy(cmap.nrsrp.origin, lat, lon)
    v = cmap.nrsrp.sample_xy(x, y)
    return np.where(cmap.nrsrp.is_nodata(v), np.nan, v)


# --------------------------------------------------------------------------
# Bands and rendering
# --------------------------------------------------------------------------

BELOW_COVERAGE = -1


def classify_bands(grid, thresholds: Sequence[float]) -> RasterGrid:
    """Band index per pixel for half-open intervals ``[t_i, t_i+1)``.

    Values below the first threshold get ``BELOW_COVERAGE`` (-1); values at
    or above the last threshold fall in the last band. Nodata propagates.
    """
    if isinstance(grid, CoverageMap):
        grid = grid.nrsrp
    t = np.asarray(thresholds, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("thresholds must be a non-empty list")
    if np.any(np.diff(t) <= 0):
        raise ValueError(f"thresholds must be strictly increasing, got {list(thresholds)}")
    vals = grid.values
    bands = np.searchsorted(t, vals, side="right") - 1
    out = np.where(grid.is_nodata(vals), grid.nodata, bands.astype(float))
    return grid.with_values(out)


#: band colors used by :func:`render_ppm`, keyed by lower NRSRP bound in dBm
PPM_RAMP = (
    (-80.0, (220, 30, 30)),    # red: above -80
    (-90.0, (245, 215, 40)),   # yellow: -90 .. -80
    (-100.0, (250, 140, 20)),  # orange: -100 .. -90
    (-110.0, (60, 170, 60)),   # green: -110 .. -100
    (-120.0, (50, 110, 220)),  # blue: -120 .. -110
)
PPM_BELOW = (200, 200, 200)
PPM_NODATA = (0, 0, 0)


def render_ppm(grid: RasterGrid) -> bytes:
    """Binary PPM (P6) heatmap of an NRSRP grid using :data:`PPM_RAMP`."""
    vals = grid.values
    img = np.empty(vals.shape + (3,), dtype=np.uint8)
    img[...] = PPM_BELOW
    done = np.zeros(vals.shape, dtype=bool)
    for lower, rgb in PPM_RAMP:
        sel = ~done & (vals >= lower)
        img[sel] = rgb
        done |= sel
    img[grid.is_nodata(vals)] = PPM_NODATA
    header = f"P6\n{grid.ncols} {grid.nrows}\n255\n".encode("ascii")
    return header + img.tobytes()
