"""``cellplan`` command line.

Exit status is 0 on success, 1 for bad input (missing files, malformed
configs or data, usage errors) and 2 for unexpected internal failures.
Data files never contain timestamps; run metadata goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import calibrate, drive_test, geo, link_budget, propagation
from .radio import CarrierConfig

log = logging.getLogger("cellplan")

DEFAULT_THRESHOLDS = (-120.0, -110.0, -100.0, -90.0, -80.0)


class InputError(Exception):
    """User-facing input problem; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


@dataclass
class ProjectConfig:
    """Paths and settings shared by several subcommands.

    Relative paths in a project file are resolved against the file's folder.
    """

    dtm: Path | None = None
    clutter: Path | None = None
    site_config: Path | None = None
    budget_config: Path | None = None
    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    output_dir: Path = Path(".")
    extra: dict = field(default_factory=dict)

    @classmethod
    def load(cls, path) -> "ProjectConfig":
        path = Path(path)
        d = _read_json(path)
        base = path.parent

        def p(key):
            return (base / d[key]) if d.get(key) else None

        cfg = cls(
            dtm=p("dtm"), clutter=p("clutter"), site_config=p("site_config"),
            budget_config=p("budget_config"),
            thresholds=tuple(float(t) for t in d.get("band_thresholds", DEFAULT_THRESHOLDS)),
            output_dir=p("output_dir") or Path("."),
        )
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("dtm", "clutter", "site_config", "budget_config"):
            v = getattr(self, name)
            if v is not None and not Path(v).exists():
                raise InputError(f"project {name} file not found: {v}")
        t = self.thresholds
        if any(b <= a for a, b in zip(t, t[1:])):
            raise InputError(f"band thresholds must be strictly increasing, got {list(t)}")


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _read_json(path) -> dict:
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}: invalid JSON ({exc.msg})") from None


def _write(path: Path, data, binary: bool = False):
    path.parent.mkdir(parents=True, exist_ok=True)
    if binary:
        path.write_bytes(data)
    else:
        path.write_text(data)
    log.info("wrote %s", path)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _read_grid(path) -> geo.RasterGrid:
    return geo.parse_ascii_grid(_read_text(path), source=str(path))


def _project(args) -> ProjectConfig:
    cfg = ProjectConfig.load(args.project) if getattr(args, "project", None) else ProjectConfig()
    for name in ("dtm", "clutter", "site_config"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, Path(v))
    if getattr(args, "out", None):
        cfg.output_dir = Path(args.out)
    if getattr(args, "thresholds", None):
        cfg.thresholds = tuple(float(t) for t in args.thresholds.split(","))
    cfg.validate()
    return cfg


def _require(cfg: ProjectConfig, *names):
    for n in names:
        if getattr(cfg, n) is None:
            raise InputError(f"--{n.replace('_', '-')} is required (or a --project file providing it)")


def load_site_config(path):
    """Parse a site JSON document into (carrier, sectors, clutter table, thresholds)."""
    d = _read_json(path)
    try:
        carrier = CarrierConfig.from_dict(d["carrier"])
        sectors = [propagation.Sector.from_dict(s) for s in d["sectors"]]
        table = propagation.clutter_table(
            [propagation.ClutterClass.from_dict(c) for c in d.get("clutter_classes", [])])
    except KeyError as exc:
        raise InputError(f"{path}: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    thresholds = d.get("band_thresholds")
    return carrier, sectors, table, (tuple(thresholds) if thresholds else None)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------


def cmd_budget(args) -> int:
    path = args.config
    try:
        budget = link_budget.LinkBudget.from_dict(_read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    if args.throughput is not None:
        budget = replace(budget, target_throughput=args.throughput)
    result = link_budget.evaluate_budget(budget)
    print(link_budget.format_budget(budget, result))
    print(f"required NRSRP for {budget.target_throughput:g} Mbps: {result.required_nrsrp:.2f} dBm")
    if args.json:
        _write(Path(args.json), _dump_json(result.to_dict()))
    return 0


def cmd_predict(args) -> int:
    cfg = _project(args)
    _require(cfg, "dtm", "clutter", "site_config")
    carrier, sectors, table, thresholds = load_site_config(cfg.site_config)
    thresholds = tuple(float(t) for t in args.thresholds.split(",")) if args.thresholds \
        else (thresholds or cfg.thresholds)
    dtm, clutter = _read_grid(cfg.dtm), _read_grid(cfg.clutter)
    t0 = time.perf_counter()
    cmap = propagation.predict_coverage(sectors, dtm, clutter, table, carrier,
                                        indoor=args.indoor, threads=args.threads)
    log.info("predicted %dx%d pixels in %.2f s", dtm.ncols, dtm.nrows, time.perf_counter() - t0)
    bands = propagation.classify_bands(cmap.nrsrp, thresholds)
    out = cfg.output_dir
    _write(out / "nrsrp.asc", geo.write_ascii_grid(cmap.nrsrp))
    _write(out / "best_beam.asc", geo.write_ascii_grid(cmap.best_beam))
    _write(out / "bands.asc", geo.write_ascii_grid(bands))
    if args.ppm:
        _write(out / "nrsrp.ppm", propagation.render_ppm(cmap.nrsrp), binary=True)
    return 0


def cmd_ingest(args) -> int:
    dlog = drive_test.parse_scanner_csv(_read_text(args.log), source=str(args.log))
    beams = sorted({s.beam_index for s in dlog.samples})
    summary = {
        "samples": len(dlog),
        "route_length_m": dlog.route.length_m,
        "beams": beams,
        "diagnostics": list(dlog.diagnostics),
    }
    print(_dump_json(summary), end="")
    if args.out:
        _write(Path(args.out), drive_test.write_scanner_csv(dlog.samples))
    return 0


def cmd_lee(args) -> int:
    params = drive_test.LeeParams(args.window, args.min_samples, args.spacing, args.freq)
    print(params.describe())
    if not args.log:
        return 0
    dlog = drive_test.parse_scanner_csv(_read_text(args.log), source=str(args.log))
    series = drive_test.resample_route(dlog, params, beam=args.beam)
    env = drive_test.lee_local_mean(series, params)
    res = drive_test.fading_residual(series, env, segment_m=args.segment)
    out = Path(args.out or ".")
    _write(out / "envelope.csv", drive_test.write_series_csv(env))
    _write(out / "residual.csv", drive_test.write_series_csv(env, "residual_db", res.residual))
    p2p = res.segment_p2p()
    summary = {
        "resampled_points": len(series),
        "envelope_points": len(env),
        "segments": len(p2p),
        "max_segment_peak_to_peak_db": float(p2p.max()) if p2p.size else None,
    }
    _write(out / "lee_summary.json", _dump_json(summary))
    return 0


def cmd_compare(args) -> int:
    nrsrp = _read_grid(args.prediction)
    cmap = propagation.CoverageMap(nrsrp, nrsrp.with_values(np.full(nrsrp.values.shape, propagation.NODATA)))
    env = drive_test.read_series_csv(_read_text(args.envelope), source=str(args.envelope))
    report = calibrate.compare(cmap, env)
    out = Path(args.out or ".")
    _write(out / "comparison.json", _dump_json(report.to_dict()))
    _write(out / "delta.csv", report.delta_csv())
    _write(out / "delta.asc", geo.write_ascii_grid(calibrate.delta_raster(report, nrsrp)))
    print(_dump_json(report.to_dict()), end="")
    return 0


def cmd_tune(args) -> int:
    cfg = _project(args)
    _require(cfg, "dtm", "clutter", "site_config")
    carrier, sectors, table, _ = load_site_config(cfg.site_config)
    dtm, clutter = _read_grid(cfg.dtm), _read_grid(cfg.clutter)
    env = drive_test.read_series_csv(_read_text(args.envelope), source=str(args.envelope))
    result = calibrate.tune_offsets(sectors, dtm, clutter, table, carrier, env,
                                    min_points=args.min_points, indoor=args.indoor)
    text = _dump_json(result.to_dict())
    print(text, end="")
    if args.out:
        _write(Path(args.out), text)
    return 0


def cmd_stats(args) -> int:
    samples = drive_test.parse_ue_csv(_read_text(args.ue), source=str(args.ue))
    text = _dump_json(drive_test.throughput_stats(samples).to_dict())
    print(text, end="")
    if args.out:
        _write(Path(args.out), text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="cellplan", description="5G NR link budget, coverage and drive-test toolkit")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("budget", help="evaluate a link budget config")
    p.add_argument("--config", required=True)
    p.add_argument("--throughput", type=float, help="override the target throughput (Mbps)")
    p.add_argument("--json", help="write the result as JSON to this path")
    p.set_defaults(func=cmd_budget)

    def area_flags(p):
        p.add_argument("--project", help="project JSON with raster/config paths")
        p.add_argument("--dtm")
        p.add_argument("--clutter")
        p.add_argument("--site-config", dest="site_config")
        p.add_argument("--indoor", action="store_true", help="add per-clutter indoor losses")

    p = sub.add_parser("predict", help="predict NRSRP, best beam and bands over the rasters")
    area_flags(p)
    p.add_argument("--out", help="output directory")
    p.add_argument("--thresholds", help="comma-separated band thresholds in dBm")
    p.add_argument("--ppm", action="store_true", help="also render nrsrp.ppm")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: CELLPLAN_THREADS, 0 = auto)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ingest", help="validate a scanner CSV")
    p.add_argument("--log", required=True)
    p.add_argument("--out", help="write the cleaned, sorted log here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("lee", help="local-mean filter a scanner log")
    p.add_argument("--log")
    p.add_argument("--freq", type=float, default=3500.0, help="carrier frequency in MHz")
    p.add_argument("--window", type=float, default=40.0, help="window length in wavelengths")
    p.add_argument("--spacing", type=float, default=0.8, help="sample spacing in wavelengths")
    p.add_argument("--min-samples", dest="min_samples", type=int, default=36)
    p.add_argument("--beam", type=int, default=None, help="use one beam instead of the best")
    p.add_argument("--segment", type=float, default=100.0, help="residual segment length (m)")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_lee)

    p = sub.add_parser("compare", help="compare a predicted NRSRP grid against an envelope CSV")
    p.add_argument("--prediction", required=True, help="nrsrp.asc from predict")
    p.add_argument("--envelope", required=True, help="envelope.csv from lee")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tune", help="fit per-clutter loss offsets to an envelope CSV")
    area_flags(p)
    p.add_argument("--envelope", required=True)
    p.add_argument("--min-points", dest="min_points", type=int, default=20)
    p.add_argument("--out", help="write offsets JSON here")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("stats", help="summary statistics of a UE speed-test CSV")
    p.add_argument("--ue", required=True)
    p.add_argument("--out", help="write stats JSON here")
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="cellplan: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (InputError, ValueError, OSError) as exc:
        print(f"cellplan {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - defensive
        print(f"cellplan {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
