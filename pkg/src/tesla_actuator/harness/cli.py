"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 failed check
(``--check``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import yaml

from ..drivetrain import calibrate_force_chain
from ..errors import (
    ConfigError, EvaluationError, InsufficientDataError, NumericalError, UndefinedValueError,
)
from ..mri.image import Roi, read_pgm, write_pgm
from ..mri.metrics import HOMOGENEITY_DEFINITIONS, evaluate, subtract
from ..turbine_model import calibrate_torque_map
from .experiments import (
    SETTLE_BAND_MM, TABLE_I, force_table, speed_pressure_sweep, summarize,
)
from .runner import run_scenario
from .scenario import build_motor, load_mapping, load_motor, load_scenario
from .trace import SPEED_LIMIT, trace_to_csv, write_atomic

log = logging.getLogger("tesla_actuator")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4


class CheckFailed(Exception):
    pass


def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _scenario(args, path):
    overrides = {}
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.seed is not None:
        overrides["seed"] = args.seed
    return load_scenario(path, **overrides)


def _run_one(args, path):
    scenario = _scenario(args, path)
    trace = run_scenario(scenario)
    out = write_atomic(Path(args.out) / f"{scenario.label}.csv", trace_to_csv(trace))
    rows = summarize(trace, scenario.targets, start_position=scenario.initial_position)
    return scenario.label, str(out), rows, any(SPEED_LIMIT in s.flags for s in trace)


def cmd_run(args):
    if args.jobs > 1 and len(args.scenario) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, [args] * len(args.scenario), args.scenario))
    else:
        results = [_run_one(args, p) for p in args.scenario]
    failed = False
    for label, out, rows, over in results:
        print(f"{label}: wrote {out}")
        if args.check:
            last = rows[-1] if rows else None
            ok = last is not None and abs(last.final_error) < SETTLE_BAND_MM and not over
            print(f"{label}: check {'PASS' if ok else 'FAIL'}")
            failed |= not ok
    if failed:
        raise CheckFailed("scenario check failed")


def cmd_sweep(args):
    motor = load_motor(args.params)
    table = speed_pressure_sweep(motor, _floats(args.pressures))
    text = _rows_csv(("pressure_bar", "speed_rpm"), table)
    write_atomic(Path(args.out) / "sweep.csv", text)
    sys.stdout.write(text)
    if args.check:
        speeds = [w for _, w in sorted(table)]
        if any(b < a for a, b in zip(speeds, speeds[1:])):
            raise CheckFailed("speed is not monotone in pressure")


def cmd_force_table(args):
    motor = load_motor(args.params)
    measured = dict(TABLE_I)
    pressures = _floats(args.pressures) if args.pressures else [p for p, _ in TABLE_I]
    rows = []
    worst = 0.0
    for p, f in force_table(motor, pressures):
        ref = measured.get(p)
        rel = (f - ref) / ref if ref else float("nan")
        if ref:
            worst = max(worst, abs(rel))
        rows.append((p, f, ref if ref is not None else "", rel))
    text = _rows_csv(("pressure_bar", "force_n", "measured_n", "rel_error"), rows)
    write_atomic(Path(args.out) / "force_table.csv", text)
    sys.stdout.write(text)
    if args.check and worst > 0.15:
        raise CheckFailed(f"force prediction off by {worst:.1%}")


def cmd_position(args):
    scenario = _scenario(args, args.scenario)
    trace = run_scenario(scenario)
    rows = summarize(trace, scenario.targets, start_position=scenario.initial_position)
    text = _rows_csv(("target_mm", "final_error_mm", "peak_overshoot_mm", "settle_time_s"),
                     [(r.target, r.final_error, r.peak_overshoot,
                       "inf" if math.isinf(r.settle_time) else r.settle_time) for r in rows])
    write_atomic(Path(args.out) / f"{scenario.label}_positioning.csv", text)
    write_atomic(Path(args.out) / f"{scenario.label}.csv", trace_to_csv(trace))
    sys.stdout.write(text)
    if args.check and not all(abs(r.final_error) < SETTLE_BAND_MM and math.isfinite(r.settle_time)
                              for r in rows):
        raise CheckFailed("a target did not settle")


def _read_pairs(path, name):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {name} {path}: {exc}") from exc
    pairs = []
    for row in csv.reader(io.StringIO(text)):
        if not row or row[0].lstrip().startswith("#"):
            continue
        try:
            pairs.append((float(row[0]), float(row[1])))
        except (ValueError, IndexError):
            if pairs:
                raise ConfigError(f"{name} {path}: bad row {row}") from None
            # header line
    return pairs


def cmd_calibrate(args):
    obs = _read_pairs(args.observations, "observations")
    data = load_mapping(args.params) if args.params else {}
    motor = build_motor(data.get("motor"))
    cal = calibrate_torque_map(obs, motor)
    motor = replace(motor, fluid=cal.fluid)
    result = {"fluid": asdict(cal.fluid), "speed_residual_rms_rpm": cal.residual_rms}
    if args.forces:
        fc = calibrate_force_chain(_read_pairs(args.forces, "forces"), motor)
        result.update(screw_efficiency=fc.screw_efficiency,
                      screw_friction_force=fc.screw_friction_force,
                      force_residual_rms_n=fc.residual_rms)
    text = yaml.safe_dump(result, sort_keys=True)
    write_atomic(Path(args.out) / "calibration.yaml", text)
    sys.stdout.write(text)


def cmd_metrics(args):
    img = read_pgm(args.image)
    roi = Roi.parse(args.roi)
    signal = Roi.parse(args.signal_roi) if args.signal_roi else roi
    if not args.noise_roi:
        raise ConfigError("--noise-roi is required for SNR")
    noise = Roi.parse(args.noise_roi)
    ref = read_pgm(args.ref) if args.ref else None
    labels = {"image": str(args.image)}
    if ref is not None:
        labels["reference"] = str(args.ref)
    report = evaluate(img, roi, signal, noise, args.homogeneity_def, ref, labels)
    text = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    out = Path(args.out)
    write_atomic(out / f"{Path(args.image).stem}_metrics.json", text)
    if ref is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_pgm(out / f"{Path(args.image).stem}_minus_{Path(args.ref).stem}.pgm", subtract(img, ref))
    sys.stdout.write(text)


def build_parser():
    p = argparse.ArgumentParser(prog="tesla-actuator", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, sim=False):
        sp.add_argument("--out", default="./out", help="output directory (default ./out)")
        sp.add_argument("--check", action="store_true", help="exit 4 if the run fails its check")
        if sim:
            sp.add_argument("--dt", type=float, help="override the time step [s]")
            sp.add_argument("--seed", type=int, help="override the scenario seed")
            sp.add_argument("--format", choices=["csv"], default="csv")

    sp = sub.add_parser("run", help="simulate scenario files and write CSV traces")
    sp.add_argument("scenario", nargs="+")
    sp.add_argument("--jobs", type=int, default=1)
    common(sp, sim=True)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="steady speed against supply pressure")
    sp.add_argument("params")
    sp.add_argument("--pressures", required=True, help="comma-separated Bar values")
    common(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("force-table", help="stalled force against supply pressure")
    sp.add_argument("params")
    sp.add_argument("--pressures", help="comma-separated Bar values (default: table rows)")
    common(sp)
    sp.set_defaults(func=cmd_force_table)

    sp = sub.add_parser("position", help="per-target positioning summary of a scenario")
    sp.add_argument("scenario")
    common(sp, sim=True)
    sp.set_defaults(func=cmd_position)

    sp = sub.add_parser("calibrate", help="fit the torque map (and force chain) to bench data")
    sp.add_argument("observations", help="CSV of pressure_bar,speed_rpm")
    sp.add_argument("--params", help="config file supplying the motor section")
    sp.add_argument("--forces", help="CSV of pressure_bar,force_n")
    common(sp)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("metrics", help="SNR / PIU / homogeneity of a P5 PGM image")
    sp.add_argument("image")
    sp.add_argument("--ref", help="reference image for subtraction")
    sp.add_argument("--roi", required=True, help="uniformity ROI x,y,w,h")
    sp.add_argument("--signal-roi", help="signal ROI x,y,w,h (default: --roi)")
    sp.add_argument("--noise-roi", help="background ROI x,y,w,h")
    sp.add_argument("--homogeneity-def", choices=HOMOGENEITY_DEFINITIONS, default="peak_to_peak_ppm")
    common(sp)
    sp.set_defaults(func=cmd_metrics)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except CheckFailed as exc:
        log.error("check failed: %s", exc)
        return EXIT_CHECK
    except (ConfigError, InsufficientDataError) as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except (NumericalError, EvaluationError, UndefinedValueError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
