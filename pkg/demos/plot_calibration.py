"""
Clutter loss calibration
========================

Measurements are simulated with residential clutter 4 dB lossier than the
model assumes. Tuning finds the offset and applying it closes the gap.
"""

import numpy as np

from cellplan.calibrate import apply_offsets, tune_offsets
from cellplan.drive_test import Series
from cellplan.geo import EnuPoint, enu_to_geo, enu_to_latlon
from cellplan.propagation import Sector, StudyArea, predict_points
from cellplan.radio import CarrierConfig
from cellplan.synthetic import default_clutter_table, flat_area, striped_clutter

carrier = CarrierConfig(3500, 60, 1944)
dtm, _ = flat_area(64, 128, cell_size=4.0)
clutter = striped_clutter(dtm, ids=(1, 2, 3), stripe_cells=10)
site = enu_to_geo(dtm.origin, EnuPoint(2.0, dtm.height_m / 2))
sectors = [Sector(site, azimuth=90.0, electrical_tilt=2.0)]
table = default_clutter_table()

rng = np.random.default_rng(1)
x = rng.uniform(30, dtm.width_m - 1, 1500)
y = rng.uniform(1, dtm.height_m - 1, 1500)
area = StudyArea(dtm, clutter, table)
pred, _, _ = predict_points(sectors, area, carrier, x, y)
cls = area.clutter_id(x, y)
measured = pred - np.where(cls == 2, 4.0, 0.0) + rng.normal(0, 2.0, x.size)
lat, lon = enu_to_latlon(dtm.origin, x, y)
track = Series(np.arange(x.size, dtype=float), measured, lat, lon)

result = tune_offsets(sectors, dtm, clutter, table, carrier, track)
for cid, off in sorted(result.offsets.items()):
    print(f"class {cid} ({table[cid].name}): {off:+.2f} dB over {result.counts[cid]} points")
print(f"rmse {result.pre_rmse:.2f} -> {result.post_rmse:.2f} dB")

# %%

tuned = apply_offsets(table, result.offsets)
print({cid: round(c.extra_loss, 2) for cid, c in tuned.items()})
