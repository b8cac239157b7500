"""Command-line entry points.

Subcommands:
  filter-report   response CSV for a designed filter or band combination
  make-fixtures   write the synthetic signal/noise WAV fixtures
  prepare         align raw WAVs to target levels, emit a levels manifest
  plan            build the randomized participant schedule
  serve           run the listening-trial HTTP service
  analyze         screen, aggregate, and export BHLD statistics
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from . import __version__
from .dsp import (BandCoefficients, DEFAULT_SAMPLE_RATE, DEFAULT_TAPS,
                  design_lowpass_fir, frequency_response)
from .errors import ParameterError
from .pipeline import (DEFAULT_PEAK_CEILING_DB, GainTable, NOISE_TARGET_RMS_DB,
                       SPEECH_TARGET_RMS_DB, loop_seam_db, measure_levels,
                       normalize_rms)
from .planner import build_schedule, write_schedule
from .records import read_log
from .stats import (DEFAULT_SCREENING_THRESHOLD_DB, GROUPINGS, aggregate_bhld,
                    export_figure_data, screen_participants)

STORAGE_ENV_VAR = "BOOSTERLAB_STORAGE"


def _storage_dir(explicit: str | None) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(STORAGE_ENV_VAR, "."))


# -- filter-report -----------------------------------------------------------

def cmd_filter_report(args) -> int:
    filt = design_lowpass_fir(args.fc, args.sample_rate, args.taps)
    combine = None
    if args.combine:
        try:
            low, high = (int(v) for v in args.combine.split(","))
        except ValueError:
            raise ParameterError("--combine expects e.g. '1,-1'")
        combine = BandCoefficients(low, high)
    curve = frequency_response(filt, combine, grid_points=args.points)

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["freq_hz", "magnitude_db"])
    for f, m in zip(curve.freq_hz, curve.magnitude_db):
        writer.writerow([f"{f:.4f}", f"{m:.4f}"])
    if args.output:
        out.close()
        print(f"wrote {args.points}-point response to {args.output}")
    return 0


# -- make-fixtures -----------------------------------------------------------

def cmd_make_fixtures(args) -> int:
    from .fixtures import make_noise, make_signal
    from .wavio import write_wav

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for sid in ("A", "B", "C"):
        sig = make_signal(sid, args.seed)
        write_wav(out / f"signal_{sid.lower()}.wav", sig.samples, sig.sample_rate_hz)
        noi = make_noise(sid, args.seed)
        write_wav(out / f"noise_{sid.lower()}.wav", noi.samples, noi.sample_rate_hz)
    print(f"wrote 6 fixture WAVs to {out}")
    return 0


# -- prepare -----------------------------------------------------------------

def _prepare_one(path: Path, out_dir: Path, name: str, target_db: float,
                 ceiling_db: float) -> dict:
    from .wavio import load_mono_wav, write_wav

    raw = load_mono_wav(path)
    before = measure_levels(raw)
    aligned, after = normalize_rms(raw, target_db, ceiling_db)
    write_wav(out_dir / f"{name}.wav", aligned.samples, aligned.sample_rate_hz)
    return {
        "id": name,
        "peak_db_before": f"{before.peak_db:.2f}",
        "rms_db_before": f"{before.rms_db:.2f}",
        "peak_db_after": f"{after.peak_db:.2f}",
        "rms_db_after": f"{after.rms_db:.2f}",
        "loop_seam_db": f"{loop_seam_db(aligned):.2f}",
    }


def cmd_prepare(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for kind, paths, target in (("signal", args.signals, args.signal_target_db),
                                ("noise", args.noises, args.noise_target_db)):
        for sid, path in zip("abc", paths):
            rows.append(_prepare_one(Path(path), out, f"{kind}_{sid}",
                                     target, args.ceiling_db))
    manifest = out / "levels.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        print(f"{row['id']}: rms {row['rms_db_before']} -> {row['rms_db_after']} dB, "
              f"peak {row['peak_db_before']} -> {row['peak_db_after']} dB")
    print(f"manifest: {manifest}")

    if args.gain_table_out:
        Path(args.gain_table_out).write_text(GainTable.default().format(), encoding="utf-8")
        print(f"gain table: {args.gain_table_out}")
    return 0


# -- plan --------------------------------------------------------------------

def cmd_plan(args) -> int:
    if args.ids:
        participant_ids = [p.strip() for p in args.ids.split(",") if p.strip()]
    else:
        participant_ids = [f"P{i + 1}" for i in range(args.participants)]
    rows = build_schedule(participant_ids, args.seed)
    write_schedule(args.out, rows)
    scored = sum(1 for r in rows if r.scored)
    print(f"wrote {len(rows)} trials ({scored} scored) for "
          f"{len(participant_ids)} participants to {args.out}")
    return 0


# -- serve -------------------------------------------------------------------

def _demo_setup(storage: Path, participants: int, seed: int) -> tuple[Path, Path]:
    """Self-contained demo: fixtures -> aligned stimuli -> schedule."""
    from .fixtures import make_noise, make_signal
    from .wavio import write_wav

    stimuli = storage / "stimuli"
    stimuli.mkdir(parents=True, exist_ok=True)
    for sid in ("A", "B", "C"):
        sig, _ = normalize_rms(make_signal(sid, seed), SPEECH_TARGET_RMS_DB)
        write_wav(stimuli / f"signal_{sid.lower()}.wav", sig.samples, sig.sample_rate_hz)
        noi, _ = normalize_rms(make_noise(sid, seed), NOISE_TARGET_RMS_DB)
        write_wav(stimuli / f"noise_{sid.lower()}.wav", noi.samples, noi.sample_rate_hz)

    schedule = storage / "schedule.jsonl"
    ids = [f"P{i + 1}" for i in range(participants)]
    write_schedule(schedule, build_schedule(ids, seed))
    return schedule, stimuli


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ExperimentService, create_app

    storage = _storage_dir(args.storage)
    storage.mkdir(parents=True, exist_ok=True)
    log_path = Path(args.log) if args.log else storage / "trials.jsonl"

    if args.demo:
        schedule_path, stimuli_dir = _demo_setup(storage, args.participants, args.seed)
        print(f"demo storage: {storage} (participants P1..P{args.participants})")
    else:
        if not args.schedule or not args.stimuli:
            print("serve: --schedule and --stimuli are required (or use --demo)",
                  file=sys.stderr)
            return 2
        schedule_path, stimuli_dir = Path(args.schedule), Path(args.stimuli)

    service = ExperimentService.from_paths(
        schedule_path, stimuli_dir, log_path,
        gain_table_path=args.gain_table, clamp_db=args.clamp, taps=args.taps)
    app = create_app(service)
    print(f"trial log: {log_path}")
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# -- analyze -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    records = []
    for path in args.logs:
        records.extend(read_log(path))
    if not records:
        print("no records found", file=sys.stderr)
        return 2

    outcome = screen_participants(records, args.threshold)
    for pid, values in sorted(outcome.dummy_adjustments.items()):
        tag = "EXCLUDED" if pid in outcome.excluded else "ok"
        print(f"{pid}: dummy adjustments {list(values)} [{tag}]")

    kept = [r for r in records if r.participant_id not in outcome.excluded]
    rows = aggregate_bhld(kept, args.grouping)
    csv_text = export_figure_data(rows)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        print(f"wrote {len(rows)} stats rows to {args.out}")
    else:
        sys.stdout.write(csv_text)

    if outcome.excluded and not args.allow_exclusions:
        print(f"screening excluded: {', '.join(outcome.excluded)}", file=sys.stderr)
        return 3
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boosterlab",
        description="Band-limited phase-inversion listening-test workbench")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter-report", help="emit freq_hz,magnitude_db CSV")
    p.add_argument("--fc", type=float, default=250.0, help="crossover frequency [Hz]")
    p.add_argument("--taps", type=int, default=DEFAULT_TAPS)
    p.add_argument("--sample-rate", type=int, default=DEFAULT_SAMPLE_RATE)
    p.add_argument("--combine", metavar="LOW,HIGH",
                   help="band signs, e.g. '1,-1' for the dip curve; omit for the lowpass alone")
    p.add_argument("--points", type=int, default=4096)
    p.add_argument("--output", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_filter_report)

    p = sub.add_parser("make-fixtures", help="write synthetic source WAVs")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=20240401)
    p.set_defaults(func=cmd_make_fixtures)

    p = sub.add_parser("prepare", help="align raw WAVs and write a levels manifest")
    p.add_argument("--signals", nargs="+", required=True,
                   help="speech WAVs, assigned ids a, b, c in order")
    p.add_argument("--noises", nargs="+", required=True,
                   help="noise WAVs, assigned ids a, b, c in order")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--signal-target-db", type=float, default=SPEECH_TARGET_RMS_DB)
    p.add_argument("--noise-target-db", type=float, default=NOISE_TARGET_RMS_DB)
    p.add_argument("--ceiling-db", type=float, default=DEFAULT_PEAK_CEILING_DB)
    p.add_argument("--gain-table-out", help="also write the default gain table config")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("plan", help="build the randomized schedule")
    p.add_argument("--participants", type=int, default=16)
    p.add_argument("--ids", help="comma-separated participant ids (overrides --participants)")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("serve", help="run the trial service")
    p.add_argument("--schedule", help="schedule JSONL from 'plan'")
    p.add_argument("--stimuli", help="directory of aligned signal_*.wav / noise_*.wav")
    p.add_argument("--log", help=f"trial log path (default: $" + STORAGE_ENV_VAR
                   + "/trials.jsonl)")
    p.add_argument("--storage", help="storage directory (overrides $" + STORAGE_ENV_VAR + ")")
    p.add_argument("--gain-table", help="key-value gain config (default: built-in table)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8715)
    p.add_argument("--clamp", type=int, default=30, help="gain clamp [dB]")
    p.add_argument("--taps", type=int, default=DEFAULT_TAPS)
    p.add_argument("--demo", action="store_true",
                   help="generate fixtures and a schedule into storage, then serve")
    p.add_argument("--participants", type=int, default=16, help="demo participant count")
    p.add_argument("--seed", type=int, default=20240401, help="demo seed")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="screen and aggregate a trial log")
    p.add_argument("logs", nargs="+", help="trial log path(s)")
    p.add_argument("--threshold", type=int, default=DEFAULT_SCREENING_THRESHOLD_DB,
                   help="dummy exclusion threshold [dB]")
    p.add_argument("--grouping", choices=GROUPINGS, default="overall")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--allow-exclusions", action="store_true",
                   help="exit 0 even when screening excluded participants")
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
