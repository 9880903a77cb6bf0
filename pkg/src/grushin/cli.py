"""Command-line interface: ``grushin <subcommand> [options]``.

Exit codes: 0 success, 1 check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

from . import __version__
from .harness import (
    STRATIFICATIONS,
    Config,
    ConfigError,
    SampleSpec,
    load_config,
    make_coloring,
    make_embedding,
    parse_window,
    run_checks,
    run_distortion,
)
from .metric import Point

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _point(text: str) -> Point:
    try:
        x, y = (float(v) for v in text.split(","))
        return Point(x, y)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from exc


def _window(text: str):
    try:
        return parse_window(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grushin", description="Grushin-plane embedding toolkit.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("--config", metavar="FILE", help="key = value configuration file")
    ap.add_argument("--out", metavar="FILE", help="write output here instead of stdout")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="evaluate F at a point")
    p.add_argument("--point", type=_point, required=True, metavar="X,Y")

    p = sub.add_parser("distance", help="distance between two points")
    p.add_argument("--from", dest="p", type=_point, required=True, metavar="X,Y")
    p.add_argument("--to", dest="q", type=_point, required=True, metavar="X,Y")
    p.add_argument("--method", choices=("shooting", "grid", "bounds"), default="shooting")

    p = sub.add_parser("boxes", help="Whitney boxes meeting a window")
    p.add_argument("--window", type=_window, required=True, metavar="X0,Y0,X1,Y1")
    p.add_argument("--n-max", type=int, default=4, help="finest level listed (default 4)")
    p.add_argument("--stars", action="store_true", help="include each box's star")

    p = sub.add_parser("colors", help="periodic coloring and W-ball offsets")
    p.add_argument("--tau", type=float, help="override the configured threshold")

    p = sub.add_parser("distort", help="distortion report over sampled pairs")
    p.add_argument("--window", type=_window, default=None, metavar="X0,Y0,X1,Y1")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stratify", choices=STRATIFICATIONS, default="case-stratified")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")

    p = sub.add_parser("check", help="run every invariant check")
    p.add_argument("--baseline", metavar="FILE", help="baseline file (default: packaged)")
    p.add_argument("--only", action="append", metavar="PREFIX", help="restrict to checks with this prefix")
    p.add_argument("--write-baseline", metavar="FILE", help="measure and write a fresh baseline file")
    return ap


# --------------------------------------------------------------------------
# subcommands


def _embed(args, cfg: Config):
    from .embedding import embed_F

    v = embed_F(args.point, make_embedding(cfg))
    return {"point": [args.point.x, args.point.y], **v.to_dict()}, None


def _distance(args, cfg: Config):
    from .geodesic import GridOracle, shooting_distance
    from .metric import distance_bounds

    p, q = args.p, args.q
    if args.method == "bounds":
        b = distance_bounds(p, q, cfg.constants)
        return {"method": "bounds", "lo": b.lo, "hi": b.hi}, None
    if args.method == "shooting":
        r = shooting_distance(p, q, cfg.shooting_tol)
    else:
        pad = 0.25 * max(abs(p.x), abs(q.x), 1e-3)
        window = (min(p.x, q.x) - pad, max(p.x, q.x) + pad, min(p.y, q.y), max(p.y, q.y))
        r = GridOracle(window=window, resolution=cfg.grid_resolution).distance(p, q)
    return {"method": r.method, "distance": r.distance, "achieved_tolerance": r.achieved_tolerance}, None


def _box_row(Q) -> dict:
    (x0, x1), (y0, y1) = Q.x_range, Q.y_range
    return {"side": Q.side, "n": Q.n, "k": Q.k, "x0": x0, "x1": x1, "y0": y0, "y1": y1}


def _boxes(args, cfg: Config):
    from .whitney import boxes_in_window, star

    boxes = boxes_in_window(*args.window, n_max=args.n_max, level_range=cfg.level_range)
    rows = []
    for Q in boxes:
        row = _box_row(Q)
        if args.stars:
            row["star"] = [[R.side, R.n, R.k] for R in sorted(star(Q))]
        rows.append(row)
    table = [_box_row(Q) for Q in boxes]
    return {"window": list(args.window), "count": len(rows), "boxes": rows}, table


def _colors(args, cfg: Config):
    from dataclasses import replace

    from .whitney import coloring_periods, wball_offsets

    if args.tau is not None:
        cfg = replace(cfg, tau=args.tau)
    coloring = make_coloring(cfg)
    offsets = [{"dn": o.dn, "flip": o.flip, "lo": o.lo, "hi": o.hi, "count": o.count}
               for o in wball_offsets(cfg.tau)]
    out = coloring.to_dict()
    out["offsets"] = offsets
    out["palette_kind"] = cfg.palette
    out["dimension"] = 2 * coloring.M + 4
    if args.tau is None:
        from .harness import report_constants

        c = report_constants(cfg)
        out["tau_theory"] = c["tau_theory"]
        out["M_theory"] = c["M_theory"]
    else:
        out["M_for_tau"] = coloring_periods(cfg.tau)[2]
    return out, offsets


def _distort(args, cfg: Config):
    from dataclasses import replace

    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    if args.samples < 0:
        raise UsageError("--samples must be nonnegative")
    spec = SampleSpec(args.window or cfg.window, args.samples, args.seed, args.stratify)
    report = run_distortion(spec, cfg)
    return report.to_dict(), report


def _check(args, cfg: Config):
    from .checks import measured_for_baseline, write_baselines

    if args.write_baseline:
        write_baselines(args.write_baseline, cfg)
        return {"written": args.write_baseline, "values": measured_for_baseline(cfg)}, None
    results = run_checks(cfg, baseline_path=args.baseline, only=tuple(args.only) if args.only else None)
    payload = {
        "checks": [r.to_dict() for r in results],
        "passed": all(r.passed for r in results),
        "counts": {s: sum(r.status == s for r in results) for s in ("pass", "fail", "skip")},
        "version": __version__,
    }
    return payload, results


COMMANDS = {"embed": _embed, "distance": _distance, "boxes": _boxes, "colors": _colors,
            "distort": _distort, "check": _check}


# --------------------------------------------------------------------------
# output


def _csv(command: str, payload: dict, extra) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if command == "distort":
        return extra.histogram_csv()
    if command == "check":
        w.writerow(["name", "status", "value", "detail"])
        for r in payload["checks"]:
            w.writerow([r["name"], r["status"], "" if r["value"] is None else repr(r["value"]), r["detail"]])
    elif command == "boxes":
        w.writerow(["side", "n", "k", "x0", "x1", "y0", "y1"])
        for row in extra:
            w.writerow([row[k] for k in ("side", "n", "k", "x0", "x1", "y0", "y1")])
    elif command == "colors":
        w.writerow(["dn", "flip", "lo", "hi", "count"])
        for o in extra:
            w.writerow([o["dn"], int(o["flip"]), o["lo"], o["hi"], o["count"]])
    else:
        raise UsageError(f"--format csv is not available for '{command}'")
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config) if args.config else Config()
        payload, extra = COMMANDS[args.command](args, cfg)
        text = (_csv(args.command, payload, extra) if args.format == "csv"
                else json.dumps(payload, sort_keys=True, indent=2) + "\n")
    except (UsageError, ConfigError, OSError) as exc:
        print(f"grushin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"grushin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:  # e.g. oracle non-convergence
        print(f"grushin: error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.command == "check" and not args.write_baseline and not payload["passed"]:
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
