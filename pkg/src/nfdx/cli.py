"""``nfdx`` command-line front end.

Failures print one line to stderr, ``nfdx: <category>: <message>``, and exit
with status 1 (2 for usage errors).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from pathlib import Path

from .errors import ConfigError, NfdxError

EXIT_FAILURE = 1


def _env_seed():
    return os.environ.get("NFDX_SEED")


def _run_config(path):
    from .formats import load_run_config

    return load_run_config(path, env_seed=_env_seed())


def _carrier(text):
    from .synth import Carrier

    return Carrier.parse(text)


def _mode(text):
    from .dsp import ImageMode

    return ImageMode.parse(text)


def _side(text):
    from .dsp import IMAGE_SIDES

    side = int(text)
    if side not in IMAGE_SIDES:
        raise argparse.ArgumentTypeError(f"side must be one of {', '.join(map(str, IMAGE_SIDES))}")
    return side


def _csv_list(parse):
    def inner(text):
        return tuple(parse(p) for p in text.split(",") if p.strip())

    return inner


def _out(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


# ------------------------------------------------------------------ commands


def cmd_synth(args) -> int:
    from .synth import default_plan, generate_dataset

    cfg = _run_config(args.config)
    synth_cfg = cfg.synth if args.seed is None else dataclasses.replace(cfg.synth, seed=args.seed)
    trials = cfg.trials if args.trials is None else args.trials
    plan = default_plan(trials=trials, largest_dimension=cfg.antenna_length)
    manifest = generate_dataset(plan, synth_cfg, args.out)
    print(f"wrote {len(manifest)} traces and {Path(args.out) / 'manifest.csv'}")
    return 0


def cmd_analyze(args) -> int:
    from .dsp import amplitude_spectrum, average_power, detect_fault_peaks
    from .formats import read_trace
    from .physics import HY6201, inner_race_frequency, outer_race_frequency

    trace = read_trace(args.trace)
    out = _out(args.out) if args.out else None
    f_rpm = args.shaft_frequency
    targets = [
        ("shaft", f_rpm),
        ("inner_race", inner_race_frequency(HY6201, f_rpm)),
        ("outer_race", outer_race_frequency(HY6201, f_rpm)),
    ]
    lines = [
        f"trace {args.trace}",
        f"condition {trace.condition.label}  carrier {trace.carrier.mhz} MHz  position {trace.position_cm} cm  "
        f"trial {trace.trial}  seed {trace.seed}",
        f"samples {len(trace)}  sample_rate {trace.sample_rate:g} Hz  duration {trace.duration:g} s",
        f"average_power magnitude {average_power(trace.magnitude):.10g}",
        f"average_power phase {average_power(trace.phase):.10g}",
    ]
    for channel in ("magnitude", "phase"):
        spec = amplitude_spectrum(getattr(trace, channel), trace.sample_rate)
        if out is not None:
            spec.to_csv(out / f"{Path(args.trace).stem}_{channel}_spectrum.csv")
        nonzero = spec.amplitudes[1:]
        peak = 1 + int(nonzero.argmax()) if nonzero.size else 0
        lines.append(
            f"{channel} dominant_peak {spec.frequencies[peak]:.4f} Hz amplitude {spec.amplitudes[peak]:.6g}"
        )
        for name, expected in targets:
            peaks = detect_fault_peaks(spec, expected, args.harmonics, max(args.tolerance, spec.bin_width))
            ks = {p.harmonic for p in peaks}
            # rotation is a single line; fault signatures need the fundamental plus one harmonic
            needed = 1 if name == "shaft" else min(2, args.harmonics)
            verdict = "present" if 1 in ks and len(ks) >= needed else "absent"
            detail = " ".join(f"k{p.harmonic}={p.frequency:.2f}Hz/{p.amplitude:.4g}" for p in peaks) or "-"
            lines.append(f"{channel} {name} expected {expected:.4f} Hz {verdict} detections {len(peaks)} {detail}")
    report = "\n".join(lines)
    print(report)
    if out is not None:
        (out / f"{Path(args.trace).stem}_report.txt").write_text(report + "\n")
    return 0


def cmd_spectrogram(args) -> int:
    from .formats import read_trace
    from .pipeline import trace_image

    cfg = _run_config(args.config)
    trace = read_trace(args.trace)
    img = trace_image(trace, args.side, args.mode, cfg.stft, args.window)
    out = _out(args.out)
    stem = out / f"{Path(args.trace).stem}_{args.mode.value}_{args.side}"
    paths = img.to_pgm(stem)
    img.to_csv(stem.with_suffix(".csv"))
    for p in paths:
        print(p)
    print(stem.with_suffix(".csv"))
    return 0


def _cell_arrays(manifest, carrier, position, cfg, side, mode, window):
    from .pipeline import image_batch

    traces = manifest.load(manifest.select(carrier, position))
    return image_batch(traces, side, mode, cfg.stft, window)


def _fold_indices(y, cfg, fold, k):
    from .evaluation import kfold_split

    folds = kfold_split(y, k=k, seed=cfg.train.seed, validation_fraction=cfg.train.validation_fraction)
    if not 0 <= fold < k:
        raise ConfigError(f"fold {fold} out of range 0..{k - 1}")
    return folds[fold]


def cmd_train(args) -> int:
    from .formats import Manifest
    from .nn import ArchConfig, init_model, save_model, train

    cfg = _run_config(args.config)
    side = args.side or cfg.image_side
    mode = args.mode or cfg.image_mode
    window = args.window or cfg.window_seconds
    manifest = Manifest.read(args.manifest)
    x, y = _cell_arrays(manifest, args.carrier, args.position, cfg, side, mode, window)
    validation = None
    if args.fold is not None:
        f = _fold_indices(y, cfg, args.fold, args.folds)
        validation = (x[f.validation], y[f.validation])
        x, y = x[f.fit], y[f.fit]

    def log(e):
        print(f"epoch {e.epoch:3d}  train_loss {e.train_loss:.6f}  val_loss {e.val_loss:.6f}  val_acc {e.val_acc:.4f}")

    model = init_model(ArchConfig(side=side), seed=cfg.train.seed)
    model, curve = train(model, x, y, cfg.train, validation=validation, log=log)
    digest = save_model(model, args.model)
    curve_path = Path(args.curve) if args.curve else Path(args.model).with_suffix(".curve.csv")
    curve.to_csv(curve_path)
    print(f"best epoch {curve.best_epoch}  val_loss {curve.best.val_loss:.6f}  val_acc {curve.best.val_acc:.4f}")
    print(f"model {args.model} sha256 {digest}")
    print(f"curve {curve_path}")
    return 0


def cmd_eval(args) -> int:
    from .evaluation import confusion, metrics
    from .formats import Manifest
    from .nn import load_model, predict

    cfg = _run_config(args.config)
    model = load_model(args.model)
    side = args.side or cfg.image_side
    mode = args.mode or cfg.image_mode
    window = args.window or cfg.window_seconds
    manifest = Manifest.read(args.manifest)
    x, y = _cell_arrays(manifest, args.carrier, args.position, cfg, side, mode, window)
    if args.fold is not None:
        f = _fold_indices(y, cfg, args.fold, args.folds)
        x, y = x[f.test], y[f.test]
    cm = confusion(predict(model, x), y)
    report = metrics(cm)
    out = _out(args.out)
    cm.to_csv(out / "confusion.csv")
    report.to_csv(out / "metrics.csv")
    print(cm.format())
    print()
    for row in list(report.rows())[1:5]:
        print(f"{row[0]:<12} {float(row[1]):8.2f} %")
    if report.empty_classes:
        print("classes with no examples: " + ", ".join(str(c) for c in report.empty_classes))
    return 0


def cmd_sweep(args) -> int:
    from .evaluation import run_sweep
    from .formats import Manifest

    cfg = _run_config(args.config)
    if args.side:
        cfg = dataclasses.replace(cfg, image_side=args.side)
    if args.folds:
        cfg = dataclasses.replace(cfg, sweep=dataclasses.replace(cfg.sweep, folds=args.folds))
    axes = args.axes or cfg.sweep.axes
    manifest = Manifest.read(args.manifest)
    result = run_sweep(
        manifest,
        axes,
        cfg,
        carriers=args.carriers,
        positions=args.positions,
        modes=args.modes,
        windows=args.windows,
        window_cell=(args.window_carrier, args.window_position),
        log=(lambda m: print(m, file=sys.stderr)) if args.verbose else None,
    )
    result.to_csv(args.out)
    print(result.format())
    return 0


def cmd_complexity(args) -> int:
    from .complexity import derive_arch, format_report, report_csv

    arch = derive_arch(args.side, args.channels)
    print(format_report(arch))
    if args.csv:
        Path(args.csv).write_text(report_csv(arch))
    return 0


# -------------------------------------------------------------------- parser


def _axes(text):
    from .formats import _axes as parse

    try:
        return parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nfdx",
        description="Antenna S11 vibration-fault toolkit. Seeds: NFDX_SEED overrides synth.seed and train.seed.",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("synth", help="generate the synthetic trace dataset and manifest")
    s.add_argument("--config", help="run config file (key = value)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--trials", type=int, help="trials per (condition, carrier, position); default from config (40)")
    s.add_argument("--seed", type=int, help="master seed; overrides config and NFDX_SEED")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("analyze", help="average power, spectrum CSV and fault-peak report for one trace")
    a.add_argument("trace", help="trace file (.s11)")
    a.add_argument("--out", help="directory for spectrum CSVs and the text report")
    a.add_argument("--harmonics", type=int, default=3, help="harmonics checked per characteristic frequency (default 3)")
    a.add_argument("--tolerance", type=float, default=2.0, help="search half-width in Hz (default 2)")
    a.add_argument("--shaft-frequency", type=float, default=25.0, help="shaft rotation frequency in Hz (default 25)")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("spectrogram", help="render a trace as a normalised 3-channel spectrogram image")
    g.add_argument("trace", help="trace file (.s11)")
    g.add_argument("--side", type=_side, default=100, help="image side: 50, 100 or 150 (default 100)")
    g.add_argument("--mode", type=_mode, default="combined", help="magnitude, phase or combined (default combined)")
    g.add_argument("--window", type=float, help="use only the leading WINDOW seconds")
    g.add_argument("--config", help="run config file for STFT settings")
    g.add_argument("--out", default=".", help="output directory (default .)")
    g.set_defaults(func=cmd_spectrogram)

    def cell_args(q):
        q.add_argument("--manifest", required=True, help="dataset manifest.csv")
        q.add_argument("--carrier", type=_carrier, default="5.8GHz", help="433MHz, 2.4GHz or 5.8GHz (default 5.8GHz)")
        q.add_argument("--position", type=int, default=0, help="antenna position in cm: 0, 5 or 10 (default 0)")
        q.add_argument("--mode", type=_mode, help="image mode; default from config (combined)")
        q.add_argument("--side", type=_side, help="image side; default from config (100)")
        q.add_argument("--window", type=float, help="leading seconds of each trace; default from config (3)")
        q.add_argument("--config", help="run config file")
        q.add_argument("--fold", type=int, help="use stratified fold FOLD: train on its training part / evaluate its test part")
        q.add_argument("--folds", type=int, default=5, help="number of folds for --fold (default 5)")

    t = sub.add_parser("train", help="train the CNN on one (carrier, position) cell")
    cell_args(t)
    t.add_argument("--model", required=True, help="output model file")
    t.add_argument("--curve", help="learning-curve CSV (default: <model>.curve.csv)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="confusion matrix and metrics of a model on one cell")
    cell_args(e)
    e.add_argument("--model", required=True, help="model file from 'nfdx train'")
    e.add_argument("--out", default=".", help="directory for confusion.csv and metrics.csv (default .)")
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", help="cross-validated accuracy over carrier/position/mode or window length")
    w.add_argument("--manifest", required=True, help="dataset manifest.csv")
    w.add_argument("--axes", type=_axes, help="comma list from carrier,position,mode, or 'window'")
    w.add_argument("--carriers", type=_csv_list(_carrier), help="carriers to sweep, e.g. 433MHz,5.8GHz")
    w.add_argument("--positions", type=_csv_list(int), help="positions in cm, e.g. 0,10")
    w.add_argument("--modes", type=_csv_list(_mode), help="image modes, e.g. magnitude,phase,combined")
    w.add_argument("--windows", type=_csv_list(float), help="window lengths in s for the window axis")
    w.add_argument("--window-carrier", type=_carrier, default="5.8GHz", help="carrier for the window axis (default 5.8GHz)")
    w.add_argument("--window-position", type=int, default=0, help="position for the window axis (default 0)")
    w.add_argument("--side", type=_side, help="image side; default from config")
    w.add_argument("--folds", type=int, help="folds per cell; default from config (5)")
    w.add_argument("--config", help="run config file")
    w.add_argument("--out", required=True, help="output CSV")
    w.add_argument("--verbose", action="store_true", help="log per-fold progress to stderr")
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("complexity", help="per-layer FLOP and parameter report")
    c.add_argument("--side", type=int, default=100, help="input side (default 100)")
    c.add_argument("--channels", type=int, default=3, help="input channels (default 3)")
    c.add_argument("--csv", help="also write the table as CSV")
    c.set_defaults(func=cmd_complexity)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NfdxError as exc:
        msg = " ".join(str(exc).split())
        print(f"nfdx: {exc.category}: {msg}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"nfdx: io: {' '.join(str(exc).split())}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
