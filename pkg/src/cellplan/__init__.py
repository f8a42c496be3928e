"""5G NR cell planning and drive-test analysis.

Link budgets, raster coverage prediction for beam-swept sectors, Lee
local-mean filtering of scanner logs and clutter-loss calibration.
"""

from importlib import resources

from .calibrate import ComparisonReport, TuneResult, apply_offsets, compare, tune_offsets
from .drive_test import (DriveLog, LeeParams, ScannerSample, StatsSummary, UeTestSample,
                         fading_residual, lee_local_mean, parse_scanner_csv, parse_ue_csv,
                         resample_route, throughput_stats)
from .geo import (EnuPoint, GeoPoint, RasterGrid, Route, cumulative_route_distance, geo_to_enu,
                  haversine_distance, parse_ascii_grid, raster_lookup, write_ascii_grid)
from .link_budget import (BudgetLineItem, BudgetResult, LinkBudget, evaluate_budget,
                          required_nrsrp_for_throughput)
from .propagation import (BeamSet, ClutterClass, CoverageMap, Sector, beam_gain, best_beam_nrsrp,
                          classify_bands, path_loss, predict_coverage)
from .radio import (CarrierConfig, db_to_linear, linear_to_db, nrsrq_from_sinr,
                    required_sinr_for_throughput, sinr_from_nrsrq, thermal_noise, wavelength)

__version__ = "0.1.0"


def paper_budget_path():
    """Path to the shipped 200 Mbps / 60 MHz reference budget."""
    return resources.files(__name__) / "data" / "paper_budget.json"
