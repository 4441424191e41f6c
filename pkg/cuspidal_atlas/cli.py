"""
Command-line interface.

Subcommands: classify, section, jointspace, cusps, sweep, scan.
Exit codes: 0 success, 1 usage or output error, 2 classification failure.
"""

import os
import sys
import argparse
import logging

from pydantic import ValidationError

from .app_config import config
from .classifier import ParamSegment, SweepAxis, SweepGrid, classify, summarize, transition_scan
from .errors import AtlasError
from .jobs import run_sweep, setup_directories
from .joint_topology import count_aspects, singular_curves
from .kinematics import DesignParams
from .references import REFERENCES, TABLE_ROWS, reference
from .workspace_analysis import curve_images, posture_regions, search_cusps, section_raster
from . import services

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CLASSIFICATION = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _add_common(p, params=True):
    if params:
        p.add_argument("--d3", type=float)
        p.add_argument("--r2", type=float)
        p.add_argument("--d4", type=float)
        p.add_argument("--reference", choices=sorted(REFERENCES), help="use a reference manipulator")
    p.add_argument("--resolution", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", help="comma separated subset of csv,json,svg")
    p.add_argument("--config", help="flat key = value run file")


def build_parser():
    parser = _Parser(prog="cuspidal-atlas", description="Classify 3R manipulators of the "
                     "alpha2=-90, alpha3=90, r3=0 family by posture counts, singularities and cusps.")
    parser.add_argument("--log-level", default=None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (("classify", "full classification report"),
                            ("section", "posture raster and critical value curves"),
                            ("jointspace", "singular curves and aspects on the joint torus"),
                            ("cusps", "cusp points of the workspace section")):
        _add_common(sub.add_parser(name, help=help_text))

    p = sub.add_parser("sweep", help="classify a parameter grid")
    _add_common(p, params=False)
    for axis in ("d3", "r2", "d4"):
        p.add_argument(f"--{axis}-range", nargs=3, type=float, metavar=("START", "STOP", "STEP"))
    p.add_argument("--table", action="store_true", help="sweep the eight reference rows")
    p.add_argument("--checkpoint", help="resume file (JSON lines)")
    p.add_argument("--threads", type=int)

    p = sub.add_parser("scan", help="signature transitions along a parameter segment")
    _add_common(p, params=False)
    p.add_argument("--start", required=True, help="d3,r2,d4")
    p.add_argument("--end", required=True, help="d3,r2,d4")
    p.add_argument("--steps", type=int)
    return parser


def _params(args):
    if args.reference:
        return reference(args.reference).params, args.reference
    if args.d3 is None or args.r2 is None or args.d4 is None:
        raise UsageError("give --d3, --r2 and --d4, or --reference")
    params = DesignParams(d3=args.d3, r2=args.r2, d4=args.d4)
    return params, f"d3_{params.d3:g}_r2_{params.r2:g}_d4_{params.d4:g}"


def _triple(text):
    try:
        d3, r2, d4 = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"expected d3,r2,d4 but got '{text}'") from None
    return DesignParams(d3=d3, r2=r2, d4=d4)


def _run_config(args, resolution_keys):
    overrides = {"output_dir": args.out, "formats": args.format}
    if args.resolution is not None:
        overrides.update({k: args.resolution for k in resolution_keys})
    if getattr(args, "threads", None) is not None:
        overrides["threads"] = args.threads
    if getattr(args, "steps", None) is not None:
        overrides["scan_steps"] = args.steps
    return config.run_config(args.config, **overrides)


def _path(cfg, name):
    return os.path.join(cfg.output_dir, name)


def cmd_classify(args):
    params, tag = _params(args)
    cfg = _run_config(args, ("joint_resolution", "section_resolution"))
    setup_directories(cfg.output_dir)
    report = classify(params, cfg)
    text = services.report_text(report)
    if "json" in cfg.formats:
        services.write_json(_path(cfg, f"classify_{tag}.json"), services.report_payload(report))
    services.write_text(_path(cfg, f"classify_{tag}.txt"), text)
    print(text, end="")


def cmd_section(args):
    params, tag = _params(args)
    cfg = _run_config(args, ("section_resolution",))
    setup_directories(cfg.output_dir)
    raster = section_raster(params, cfg.section_resolution, degeneracy=cfg.degeneracy)
    curves = singular_curves(params, cfg.joint_resolution, eps_curve=cfg.eps_curve)
    if "csv" in cfg.formats:
        services.write_csv(_path(cfg, f"section_{tag}.csv"), services.RASTER_HEADER, raster.rows())
    if "svg" in cfg.formats:
        cusps = search_cusps(params, curves, eps_axis=cfg.eps_axis, eps_dedup=cfg.eps_dedup,
                             eps_triple=cfg.eps_triple, eps_nondeg=cfg.eps_nondeg).cusps
        svg = services.section_svg(params.label(), raster, curve_images(params, curves),
                                   posture_regions(raster), cusps)
        services.write_text(_path(cfg, f"section_{tag}.svg"), svg)
    print(f"{params.label()}: posture histogram {raster.histogram()}")


def cmd_jointspace(args):
    params, tag = _params(args)
    cfg = _run_config(args, ("joint_resolution",))
    setup_directories(cfg.output_dir)
    curves = singular_curves(params, cfg.joint_resolution, eps_curve=cfg.eps_curve)
    aspects = count_aspects(params, start_resolution=cfg.joint_resolution,
                            max_resolution=cfg.max_joint_resolution)
    if "csv" in cfg.formats:
        rows = ([k, c.factor, t2, t3] for k, c in enumerate(curves) for t2, t3 in c.points)
        services.write_csv(_path(cfg, f"jointspace_{tag}.csv"), ["curve", "factor", "theta2", "theta3"], rows)
    if "svg" in cfg.formats:
        services.write_text(_path(cfg, f"jointspace_{tag}.svg"),
                            services.jointspace_svg(params.label(), curves, aspects))
    print(f"{params.label()}: {len(curves)} singular curves, {aspects.aspect_count} aspects")


def cmd_cusps(args):
    params, tag = _params(args)
    cfg = _run_config(args, ("joint_resolution",))
    setup_directories(cfg.output_dir)
    curves = singular_curves(params, cfg.joint_resolution, eps_curve=cfg.eps_curve)
    search = search_cusps(params, curves, eps_axis=cfg.eps_axis, eps_dedup=cfg.eps_dedup,
                          eps_triple=cfg.eps_triple, eps_nondeg=cfg.eps_nondeg)
    if "csv" in cfg.formats:
        services.write_csv(_path(cfg, f"cusps_{tag}.csv"), services.CUSP_HEADER, services.cusp_rows(search.cusps))
    if "json" in cfg.formats:
        services.write_json(_path(cfg, f"cusps_{tag}.json"), {
            "params": params.model_dump(),
            "cusps": [dict(zip(services.CUSP_HEADER, row)) for row in services.cusp_rows(search.cusps)],
            "candidates": search.candidates,
            "dropped": search.dropped,
        })
    print(f"{params.label()}: {len(search.cusps)} cusps")


def _sweep_grid(args):
    if args.table:
        return SweepGrid(points=[REFERENCES[k].params for k in TABLE_ROWS])
    ranges = {axis: getattr(args, f"{axis}_range") for axis in ("d3", "r2", "d4")}
    if not any(ranges.values()):
        return SweepGrid()
    if not all(ranges.values()):
        raise UsageError("give all of --d3-range, --r2-range and --d4-range, or --table")
    return SweepGrid(**{axis: SweepAxis(start=v[0], stop=v[1], step=v[2]) for axis, v in ranges.items()})


def cmd_sweep(args):
    cfg = _run_config(args, ("joint_resolution", "section_resolution"))
    grid = _sweep_grid(args)
    setup_directories(cfg.output_dir)
    checkpoint = args.checkpoint or _path(cfg, "sweep.checkpoint.jsonl")
    records = run_sweep(grid, cfg, checkpoint, args.threads)
    services.write_csv(_path(cfg, "sweep.csv"), services.SWEEP_HEADER, services.sweep_rows(records))
    summary = summarize(records)
    text = services.summary_text(summary)
    if "json" in cfg.formats:
        services.write_json(_path(cfg, "sweep_summary.json"), services.summary_payload(summary))
    services.write_text(_path(cfg, "sweep_summary.txt"), text)
    if summary.failed:
        logging.warning(f"{summary.failed} of {len(records)} sweep points failed")
    print(f"{len(records)} points classified, {summary.failed} failed")
    print(text, end="")


def cmd_scan(args):
    cfg = _run_config(args, ("joint_resolution", "section_resolution"))
    segment = ParamSegment(start=_triple(args.start), end=_triple(args.end))
    setup_directories(cfg.output_dir)
    result = transition_scan(segment, cfg.scan_steps, precision=cfg.scan_precision, run_config=cfg)
    services.write_json(_path(cfg, "scan.json"), services.scan_payload(result))
    for t in result.transitions:
        print(f"s={t.s:.6f} {t.before} -> {t.after} distances {t.distances}")


COMMANDS = {
    "classify": cmd_classify,
    "section": cmd_section,
    "jointspace": cmd_jointspace,
    "cusps": cmd_cusps,
    "sweep": cmd_sweep,
    "scan": cmd_scan,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    level = getattr(logging, (args.log_level or config.LOG_LEVEL).upper(), logging.INFO)
    logging.basicConfig(level=level, format='%(asctime)s - %(levelname)s - %(message)s')

    try:
        COMMANDS[args.command](args)
    except AtlasError as e:
        logging.error(f"Classification failed: {e}")
        return EXIT_CLASSIFICATION
    except (UsageError, ValidationError, ValueError) as e:
        logging.error(f"Usage error: {e}")
        return EXIT_USAGE
    except OSError as e:
        logging.error(f"Output error: {e}")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
