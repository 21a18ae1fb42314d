"""Command-line entry point: ``gaitspeed <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

import argparse
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import __version__, evaluation, features, groundtruth, ingest, simulator, svr, transitions
from .features import ALL_KINDS, WINDOW_HALF_WIDTH, Window, parse_kind

REPORT_SCHEMA_VERSION = 1
MANIFEST_SCHEMA_VERSION = 1


class CliError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# file helpers


def _read_bytes(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except FileNotFoundError:
        raise CliError(f"input file not found: {path}") from None
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _write_text(path, text):
    parent = os.path.dirname(path)
    try:
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _digest(path):
    return hashlib.sha256(_read_bytes(path)).hexdigest()


def _dump_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _render(writer, rows):
    buf = io.StringIO()
    writer(rows, buf)
    return buf.getvalue()


def _write_manifest(path, subcommand, options, inputs, outputs, base=None, extra=None):
    """Manifest with content digests; output paths are stored relative to ``base``."""
    base = base or os.path.dirname(os.path.abspath(path))
    doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": "gaitspeed",
        "version": __version__,
        "subcommand": subcommand,
        "options": options,
        "inputs": {p: _digest(p) for p in inputs if p},
        "outputs": {os.path.relpath(os.path.abspath(p), base): _digest(p) for p in outputs},
    }
    if extra:
        doc.update(extra)
    _write_text(path, _dump_json(doc))


def _sidecar(path):
    return path + ".manifest.json"


# ---------------------------------------------------------------------------
# loaders


def _load_events(path, exclusions=None, tz=0):
    events = ingest.parse_event_csv(_read_bytes(path))
    if exclusions:
        cals = ingest.parse_exclusion_csv(_read_bytes(exclusions))
        kept = []
        for pid, evs in ingest.by_participant(events).items():
            cal = cals.get(pid)
            kept.extend(ingest.apply_exclusions(evs, cal, tz) if cal else evs)
        kept.sort(key=lambda e: (e.participant, e.t_ms))
        events = kept
    return events


def _load_targets(path):
    """Daily-velocity or clinic CSV, told apart by header; returns (mode, rows)."""
    data = _read_bytes(path)
    first = data.decode("utf-8").split("\n", 1)[0].strip()
    if first == ",".join(groundtruth.DAILY_HEADER):
        return "daily", groundtruth.read_daily_csv(data)
    if first == ",".join(groundtruth.CLINIC_HEADER):
        return "clinical", groundtruth.read_clinic_csv(data)
    if not first:
        return None, []
    raise CliError(f"{path}: unrecognised targets header {first!r}")


def _parse_pair(text):
    a, sep, b = text.partition(":")
    if not sep or not a or not b:
        raise argparse.ArgumentTypeError(f"pair must look like 'from:to', got {text!r}")
    return (a, b)


def _svr_params(args):
    return svr.SvrParams(epsilon=args.epsilon, tolerance=args.tolerance, max_iter=args.max_iter)


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    cfg = simulator.load_config(args.config) if args.config else simulator.default_config()
    if args.households > 1:
        results = simulator.simulate_cohort(cfg, args.households, args.days, args.seed)
    else:
        results = [simulator.simulate(cfg, args.days, args.seed)]
    files = simulator.export(results, args.out_dir)
    _write_manifest(
        os.path.join(args.out_dir, "manifest.json"), "simulate",
        {"days": args.days, "seed": args.seed, "households": args.households, "config": args.config},
        [args.config], sorted(files.values()), base=args.out_dir,
        extra={"resolved_config": simulator.config_to_dict(cfg)},
    )
    n_events = sum(len(r.events) for r in results)
    print(f"simulated {len(results)} household(s), {args.days} days, {n_events} events -> {args.out_dir}")
    return 0


def cmd_ingest(args):
    events = _load_events(args.input, args.exclusions, args.tz_offset_minutes)
    days = ingest.split_days(events, args.tz_offset_minutes)
    _write_text(args.out, ingest.serialize_events(events))
    _write_manifest(_sidecar(args.out), "ingest",
                    {"in": args.input, "exclusions": args.exclusions, "tz_offset_minutes": args.tz_offset_minutes},
                    [args.input, args.exclusions], [args.out])
    n_pid = len({e.participant for e in events})
    print(f"{len(events)} events, {n_pid} participant(s), {len(days)} participant-days -> {args.out}")
    return 0


def cmd_extract(args):
    events = _load_events(args.input, args.exclusions, args.tz_offset_minutes)
    days = ingest.split_days(events, args.tz_offset_minutes)
    records = transitions.transitions_from_days(days, args.cap_seconds, args.min_count)
    _write_text(args.out, _render(transitions.write_transitions_csv, records))
    _write_manifest(_sidecar(args.out), "extract-transitions",
                    {"in": args.input, "exclusions": args.exclusions, "cap_seconds": args.cap_seconds,
                     "min_count": args.min_count, "tz_offset_minutes": args.tz_offset_minutes},
                    [args.input, args.exclusions], [args.out])
    print(f"{len(records)} transition records -> {args.out}")
    return 0


def cmd_ground_truth(args):
    events = _load_events(args.input, args.exclusions, args.tz_offset_minutes)
    geometry = ingest.parse_line_geometry(_read_bytes(args.line_geometry)) if args.line_geometry else None
    days = ingest.split_days(events, args.tz_offset_minutes)
    truth = groundtruth.ground_truth(days, geometry, seed=args.seed, max_gap=args.max_gap)
    rows = []
    qq_buf = io.StringIO()
    first = True
    for pid, pt in truth.items():
        if pt.skipped:
            print(f"warning: participant {pid} skipped: {pt.skipped}", file=sys.stderr)
            continue
        rows.extend(pt.daily)
        if args.qq_report:
            try:
                qq = groundtruth.qq_diagnostic([e.velocity for e in pt.retained])
            except ValueError as exc:
                print(f"warning: no Q-Q diagnostic for {pid}: {exc}", file=sys.stderr)
                continue
            groundtruth.write_qq_csv(pid, qq, qq_buf, header=first)
            first = False
    _write_text(args.out, _render(groundtruth.write_daily_csv, rows))
    outputs = [args.out]
    if args.qq_report:
        _write_text(args.qq_report, qq_buf.getvalue())
        outputs.append(args.qq_report)
    if args.clinic_out:
        _write_text(args.clinic_out, _render(groundtruth.write_clinic_csv,
                                             groundtruth.clinic_targets(events, args.tz_offset_minutes)))
        outputs.append(args.clinic_out)
    _write_manifest(_sidecar(args.out), "ground-truth",
                    {"in": args.input, "exclusions": args.exclusions, "line_geometry": args.line_geometry,
                     "seed": args.seed, "max_gap": args.max_gap, "tz_offset_minutes": args.tz_offset_minutes,
                     "qq_report": args.qq_report, "clinic_out": args.clinic_out},
                    [args.input, args.exclusions, args.line_geometry], outputs)
    print(f"{len(rows)} daily velocity rows for {len(truth)} participant(s) -> {args.out}")
    return 0


def cmd_features(args):
    records = transitions.read_transitions_csv(_read_bytes(args.transitions))
    kinds = tuple(parse_kind(k) for k in args.kinds.split(",")) if args.kinds else ALL_KINDS
    if args.mode == "daily":
        samples = features.daily_features(records, kinds)
    else:
        if not args.clinic:
            raise CliError("--mode window needs --clinic")
        clinic = groundtruth.read_clinic_csv(_read_bytes(args.clinic))
        dates = {}
        for c in clinic:
            dates.setdefault(c.participant, []).append(c.date)
        samples = features.window_features(records, dates, args.window_days, kinds)
    _write_text(args.out, _render(features.write_features_csv, samples))
    _write_manifest(_sidecar(args.out), "features",
                    {"transitions": args.transitions, "mode": args.mode, "window_days": args.window_days,
                     "clinic": args.clinic, "kinds": [k.value for k in kinds]},
                    [args.transitions, args.clinic], [args.out])
    print(f"{len(samples)} feature samples -> {args.out}")
    return 0


def cmd_train(args):
    samples = features.read_features_csv(_read_bytes(args.features))
    mode, targets = _load_targets(args.targets)
    kind = parse_kind(args.kind)
    tmap = {(t.participant, t.date): (t.mean_velocity if mode == "daily" else t.velocity) for t in targets}
    chosen = [s for s in samples if s.kind == kind and s.pair == args.pair
              and (args.participant is None or s.participant == args.participant)
              and isinstance(s.scope, Window) == (mode == "clinical")]
    joined, _ = evaluation.join_samples(chosen, tmap)
    if not joined:
        raise CliError("no matched samples")
    if len({k[0] for k in joined}) > 1:
        raise CliError("features cover several participants; pick one with --participant")
    (_, x, y), = joined.values()
    params = _svr_params(args)
    if args.C is not None:
        C, cv = args.C, None
    else:
        gs = svr.grid_search_C(x, y, folds=min(args.folds, y.size), seed=args.seed, params=params)
        C, cv = gs.best_C, gs.cv_rmse
    model = svr.fit(x, y, params.with_C(C))
    doc = model.to_dict()
    doc["feature"] = {"kind": kind.value, "pair": list(args.pair), "n_samples": int(y.size)}
    if cv is not None:
        doc["grid"] = {repr(c): (v if np.isfinite(v) else None) for c, v in cv.items()}
    _write_text(args.out, _dump_json(doc))
    _write_manifest(_sidecar(args.out), "train",
                    {"features": args.features, "targets": args.targets, "kind": kind.value,
                     "pair": list(args.pair), "participant": args.participant, "C": args.C,
                     "epsilon": args.epsilon, "tolerance": args.tolerance, "max_iter": args.max_iter,
                     "folds": args.folds, "seed": args.seed},
                    [args.features, args.targets], [args.out])
    print(f"trained on {y.size} samples, C={C:g}, w={model.w:.6g} -> {args.out}")
    return 0


def _line_fit(pred, truth):
    if len(pred) < 3:
        return None
    try:
        return evaluation.predicted_vs_true(pred, truth).to_dict()
    except ValueError:
        return None


def _report_doc(report, args, population):
    kind = parse_kind(args.summary_kind)
    means = evaluation.participant_mean_points(report, kind)
    daily = evaluation.oof_points(report, kind)
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "mode": report.mode,
        "window_days": report.window_days,
        "seed": args.seed,
        "folds": args.folds,
        "epsilon": args.epsilon,
        "n_unmatched_samples": report.n_unmatched,
        "cells": [c.summary() for c in report.cells],
        "skipped": [s.summary() for s in report.skipped],
        "population": population.to_dict() if population else None,
        "pred_vs_true": {
            "kind": kind.value,
            "fit": _line_fit([m[4] for m in means], [m[3] for m in means]),
            "points": [[pid, f"{pair[0]}:{pair[1]}", n, t, q] for pid, pair, n, t, q in means],
            "daily_fit": _line_fit([d[3] for d in daily], [d[2] for d in daily]),
            "daily_points": [[pid, d.isoformat(), t, q] for pid, d, t, q in daily],
        },
    }


def _evaluate(args, samples, mode, targets):
    params = _svr_params(args)
    try:
        if mode == "daily":
            report = evaluation.evaluate_daily(samples, targets, args.folds, args.seed, params)
        else:
            report = evaluation.clinical_evaluate(samples, targets, args.window_days, args.folds, args.seed, params)
    except evaluation.CellError as exc:
        raise CliError(str(exc)) from None
    population = evaluation.population_aggregate(report.by_participant()) if report.cells else None
    return _report_doc(report, args, population)


def cmd_evaluate(args):
    samples = features.read_features_csv(_read_bytes(args.features))
    tmode, targets = _load_targets(args.targets)
    if tmode is not None and tmode != args.mode:
        raise CliError(f"--mode {args.mode} does not match the {tmode} targets in {args.targets}")
    doc = _evaluate(args, samples, args.mode, targets)
    _write_text(args.out, _dump_json(doc))
    outputs = [args.out]
    if args.plots_dir:
        outputs.extend(_write_plot_csvs(doc, args.plots_dir))
    _write_manifest(_sidecar(args.out), "evaluate",
                    {"features": args.features, "targets": args.targets, "mode": args.mode,
                     "window_days": args.window_days, "seed": args.seed, "folds": args.folds,
                     "epsilon": args.epsilon, "tolerance": args.tolerance, "max_iter": args.max_iter,
                     "plots_dir": args.plots_dir, "summary_kind": args.summary_kind},
                    [args.features, args.targets], outputs)
    print(_summary_text(doc), end="")
    return 0


# ---------------------------------------------------------------------------
# report rendering


def _write_plot_csvs(doc, out_dir, prefix=""):
    pop = doc.get("population") or {"per_kind": {}, "n_participants": {}}
    lines = ["kind,population_rmse_cm_s,n_participants"]
    for k in ALL_KINDS:
        if k.value in pop["per_kind"]:
            lines.append(f"{k.value},{pop['per_kind'][k.value]!r},{pop['n_participants'][k.value]}")
    kind_path = os.path.join(out_dir, f"{prefix}kind_rmse.csv")
    _write_text(kind_path, "\n".join(lines) + "\n")
    lines = ["participant,pair,n_days,mean_true_cm_s,mean_predicted_cm_s"]
    for pid, pair, n, t, p in doc["pred_vs_true"]["points"]:
        lines.append(f"{pid},{pair},{n},{t!r},{p!r}")
    participant_path = os.path.join(out_dir, f"{prefix}pred_vs_true_participants.csv")
    _write_text(participant_path, "\n".join(lines) + "\n")
    lines = ["participant,date,true_cm_s,predicted_cm_s"]
    for pid, day, t, p in doc["pred_vs_true"]["daily_points"]:
        lines.append(f"{pid},{day},{t!r},{p!r}")
    daily = os.path.join(out_dir, f"{prefix}pred_vs_true_daily.csv")
    _write_text(daily, "\n".join(lines) + "\n")
    return [kind_path, participant_path, daily]


def _summary_text(doc):
    out = [f"mode: {doc['mode']}" + (f" (window {doc['window_days']} days)" if doc.get("window_days") else "")]
    out.append(f"cells evaluated: {len(doc['cells'])}, skipped: {len(doc['skipped'])}, "
               f"unmatched samples: {doc['n_unmatched_samples']}")
    pop = doc.get("population")
    if pop:
        out.append("population RMSE by feature kind (cm/s):")
        for k in pop["ordering"]:
            out.append(f"  {k:<7} {pop['per_kind'][k]:7.3f}  (participants: {pop['n_participants'][k]})")
        out.append("best per participant:")
        for pid, b in sorted(pop["best"].items()):
            out.append(f"  {pid}: {evaluation.pair_label(b['pair'])}, {b['kind']}, {b['rmse_mean']:.3f} cm/s")
        rows = {}
        for c in doc["cells"]:
            key = (c["participant"], c["kind"])
            if key not in rows or (c["rmse_mean"], c["pair"]) < (rows[key]["rmse_mean"], rows[key]["pair"]):
                rows[key] = c
        out.append("best room pair per participant and kind (mean +/- sd over folds):")
        order = {k.value: i for i, k in enumerate(ALL_KINDS)}
        for (pid, kind), c in sorted(rows.items(), key=lambda kv: (kv[0][0], order[kv[0][1]])):
            out.append(f"  {pid} {kind:<7} {evaluation.pair_label(c['pair']):<28} "
                       f"{c['rmse_mean']:.2f} +/- {c['rmse_sd']:.2f}  (n={c['n_samples']}, {c['method']})")
    for key, what in (("fit", "participant means"), ("daily_fit", "out-of-fold days")):
        fit = doc["pred_vs_true"][key]
        if fit:
            out.append(f"predicted vs true, {what} ({doc['pred_vs_true']['kind']}): slope {fit['slope']:.3f}, "
                       f"intercept {fit['intercept']:.3f}, r^2 {fit['r_squared']:.4f}, n={fit['n']}")
    return "\n".join(out) + "\n"


def cmd_report(args):
    try:
        doc = json.loads(_read_bytes(args.input).decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise CliError(f"{args.input}: not a JSON report ({exc})") from None
    if doc.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise CliError(f"{args.input}: unsupported report schema_version {doc.get('schema_version')!r}")
    text = _summary_text(doc)
    if args.out_dir:
        outputs = _write_plot_csvs(doc, args.out_dir, args.prefix)
        txt = os.path.join(args.out_dir, f"{args.prefix}report.txt")
        _write_text(txt, text)
        outputs.append(txt)
        _write_manifest(os.path.join(args.out_dir, f"{args.prefix}report.manifest.json"), "report",
                        {"in": args.input, "prefix": args.prefix}, [args.input], outputs, base=args.out_dir)
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# pipeline


def cmd_pipeline(args):
    out = args.out_dir
    sim_dir = os.path.join(out, "sim")
    cfg = simulator.load_config(args.config) if args.config else simulator.default_config()
    if args.households > 1:
        results = simulator.simulate_cohort(cfg, args.households, args.days, args.seed)
    else:
        results = [simulator.simulate(cfg, args.days, args.seed)]
    sim_files = simulator.export(results, sim_dir)
    tz = cfg.tz_offset

    events = []
    for r in results:
        events.extend(ingest.apply_exclusions(r.events, r.exclusions, tz))
    events.sort(key=lambda e: (e.participant, e.t_ms))
    days = ingest.split_days(events, tz)
    records = transitions.transitions_from_days(days, args.cap_seconds, args.min_count)
    p_trans = os.path.join(out, "transitions.csv")
    _write_text(p_trans, _render(transitions.write_transitions_csv, records))

    truth = groundtruth.ground_truth(days, cfg.line_geometry(), seed=args.seed)
    daily = [d for pt in truth.values() if not pt.skipped for d in pt.daily]
    p_daily = os.path.join(out, "daily_velocity.csv")
    _write_text(p_daily, _render(groundtruth.write_daily_csv, daily))
    qq_buf = io.StringIO()
    first = True
    for pid, pt in truth.items():
        if pt.skipped or len(pt.retained) < groundtruth.MIN_QQ_POINTS:
            continue
        try:
            qq = groundtruth.qq_diagnostic([e.velocity for e in pt.retained])
        except ValueError:
            continue
        groundtruth.write_qq_csv(pid, qq, qq_buf, header=first)
        first = False
    p_qq = os.path.join(out, "qq.csv")
    _write_text(p_qq, qq_buf.getvalue())

    clinic = groundtruth.clinic_targets(events, tz)
    p_clinic = os.path.join(out, "clinic.csv")
    _write_text(p_clinic, _render(groundtruth.write_clinic_csv, clinic))

    daily_samples = features.daily_features(records)
    p_feat = os.path.join(out, "features_daily.csv")
    _write_text(p_feat, _render(features.write_features_csv, daily_samples))
    doc = _evaluate(args, daily_samples, "daily", daily)
    p_report = os.path.join(out, "report.json")
    _write_text(p_report, _dump_json(doc))
    outputs = [p_trans, p_daily, p_qq, p_clinic, p_feat, p_report]
    outputs.extend(_write_plot_csvs(doc, out))
    text = _summary_text(doc)

    dates = {}
    for c in clinic:
        dates.setdefault(c.participant, []).append(c.date)
    win_samples = features.window_features(records, dates, args.window_days) if clinic else []
    p_win = os.path.join(out, f"features_window{args.window_days}.csv")
    _write_text(p_win, _render(features.write_features_csv, win_samples))
    outputs.append(p_win)
    clinical_note = None
    try:
        cdoc = _evaluate(args, win_samples, "clinical", clinic)
    except CliError as exc:
        clinical_note = str(exc)
    else:
        p_creport = os.path.join(out, "report_clinical.json")
        _write_text(p_creport, _dump_json(cdoc))
        outputs.append(p_creport)
        outputs.extend(_write_plot_csvs(cdoc, out, "clinical_"))
        text += "\n" + _summary_text(cdoc)
    if clinical_note:
        text += f"\nclinical mode not evaluated: {clinical_note}\n"
    p_txt = os.path.join(out, "report.txt")
    _write_text(p_txt, text)
    outputs.append(p_txt)

    _write_manifest(
        os.path.join(out, "manifest.json"), "pipeline",
        {"config": args.config, "days": args.days, "seed": args.seed, "households": args.households,
         "cap_seconds": args.cap_seconds, "min_count": args.min_count, "window_days": args.window_days,
         "folds": args.folds, "epsilon": args.epsilon, "tolerance": args.tolerance, "max_iter": args.max_iter, "summary_kind": args.summary_kind},
        [args.config], sorted(sim_files.values()) + outputs, base=out,
        extra={"resolved_config": simulator.config_to_dict(cfg)},
    )
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _add_svr_flags(p):
    p.add_argument("--epsilon", type=float, default=0.1, help="tube half-width in standardised target units")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iter", type=_positive_int, default=100_000)
    p.add_argument("--folds", type=_positive_int, default=evaluation.DEFAULT_FOLDS)


def _add_summary_kind_flag(p):
    p.add_argument("--summary-kind", default="P20", help="feature kind for the predicted-vs-true summary")


def _add_tz(p):
    p.add_argument("--tz-offset-minutes", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="gaitspeed", description="Gait velocity from in-home room transition times.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    p = sub.add_parser("simulate", help="generate a synthetic household event stream")
    p.add_argument("--config", help="household TOML (built-in default when omitted)")
    p.add_argument("--days", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--households", type=_positive_int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ingest", help="validate an event CSV and drop excluded days")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--exclusions")
    p.add_argument("--out", required=True)
    _add_tz(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract-transitions", help="room transition times from area-motion events")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--exclusions")
    p.add_argument("--cap-seconds", type=float, default=transitions.DEFAULT_DWELL_CAP)
    p.add_argument("--min-count", type=int, default=transitions.DEFAULT_MIN_COUNT)
    p.add_argument("--out", required=True)
    _add_tz(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("ground-truth", help="daily gait velocity from sensor-line walks")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--exclusions")
    p.add_argument("--line-geometry")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-gap", type=float, default=groundtruth.DEFAULT_MAX_GAP)
    p.add_argument("--qq-report")
    p.add_argument("--clinic-out", help="also write clinic velocities found in the events")
    p.add_argument("--out", required=True)
    _add_tz(p)
    p.set_defaults(func=cmd_ground_truth)

    p = sub.add_parser("features", help="distributional features of transition times")
    p.add_argument("--transitions", required=True)
    p.add_argument("--mode", choices=("daily", "window"), default="daily")
    p.add_argument("--window-days", type=int, choices=sorted(WINDOW_HALF_WIDTH), default=15)
    p.add_argument("--clinic")
    p.add_argument("--kinds", help="comma-separated subset, e.g. P20,Mean")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit one linear SVR model")
    p.add_argument("--features", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--kind", required=True)
    p.add_argument("--pair", type=_parse_pair, required=True)
    p.add_argument("--participant")
    p.add_argument("--C", type=float, help="skip the grid search and use this C")
    p.add_argument("--seed", type=int, default=0)
    _add_svr_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="cross-validated RMSE for every pair and feature kind")
    p.add_argument("--features", required=True)
    p.add_argument("--targets", required=True)
    p.add_argument("--mode", choices=("daily", "clinical"), default="daily")
    p.add_argument("--window-days", type=int, choices=sorted(WINDOW_HALF_WIDTH), default=15)
    p.add_argument("--seed", type=int, required=True)
    _add_svr_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--plots-dir")
    _add_summary_kind_flag(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render report.json as text plus plot CSVs")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--prefix", default="")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("pipeline", help="simulate, extract, label, featurize and evaluate in one go")
    p.add_argument("--config")
    p.add_argument("--days", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--households", type=_positive_int, default=1)
    p.add_argument("--cap-seconds", type=float, default=transitions.DEFAULT_DWELL_CAP)
    p.add_argument("--min-count", type=int, default=transitions.DEFAULT_MIN_COUNT)
    p.add_argument("--window-days", type=int, choices=sorted(WINDOW_HALF_WIDTH), default=15)
    _add_svr_flags(p)
    p.add_argument("--out-dir", required=True)
    _add_summary_kind_flag(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CliError, OSError, ValueError, RuntimeError) as exc:
        print(f"gaitspeed {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
