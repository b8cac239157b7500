"""Live listening-trial service: serve Sound A/B, step gain, record trials.

A run is a single-writer state machine per participant; control
mutations are serialized behind a lock while audio reads serve cached
bytes.  Committed trials go to an append-only JSON-lines log, and a
restart resumes after the last committed trial by replaying that log.
The client only ever sees "Sound A"/"Sound B", the trial counter, and
its own gain; the condition behind a trial is never exposed mid-run.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from pydantic import BaseModel

from .dsp import AudioBuffer, DEFAULT_TAPS
from .errors import ScheduleError
from .pipeline import GainTable, render_trial_pair
from .planner import ScheduleRow, read_schedule
from .records import TrialRecord, append_record, read_log
from .wavio import load_mono_wav, stereo_wav_bytes

DEFAULT_GAIN_CLAMP_DB = 30

PHASE_IDLE = "idle"
PHASE_PLAYING_A = "playing_a"
PHASE_PLAYING_B = "playing_b"
PHASE_STOPPED = "stopped"


class ServiceError(RuntimeError):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


@dataclass
class Run:
    """Mutable state for one participant's run."""

    participant_id: str
    rows: list[ScheduleRow]
    cursor: int = 0
    gain_db: int = 0
    phase: str = PHASE_IDLE
    playback_count_a: int = 0
    playback_count_b: int = 0
    trial_started_at: str = ""
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _audio_cache: dict = field(default_factory=dict, repr=False)

    @property
    def done(self) -> bool:
        return self.cursor >= len(self.rows)

    @property
    def current_row(self) -> ScheduleRow:
        if self.done:
            raise ServiceError("run is complete; no active trial", 409)
        return self.rows[self.cursor]

    def state_summary(self) -> dict:
        return {
            "participant": self.participant_id,
            "completed": self.cursor,
            "total": len(self.rows),
            "gain_db": self.gain_db,
            "phase": self.phase,
            "done": self.done,
        }


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class ExperimentService:
    """Holds the stimuli, the schedule, and all active runs."""

    def __init__(self, schedule_rows: list[ScheduleRow],
                 signals: dict[str, AudioBuffer],
                 noises: dict[str, AudioBuffer],
                 log_path: str | Path,
                 gains: GainTable | None = None,
                 clamp_db: int = DEFAULT_GAIN_CLAMP_DB,
                 taps: int = DEFAULT_TAPS):
        self.signals = signals
        self.noises = noises
        self.gains = gains or GainTable.default()
        self.log_path = Path(log_path)
        self.clamp_db = clamp_db
        self.taps = taps
        self.runs: dict[str, Run] = {}
        self._runs_lock = threading.Lock()

        self.schedule: dict[str, list[ScheduleRow]] = {}
        for row in schedule_rows:
            self.schedule.setdefault(row.participant, []).append(row)

    @classmethod
    def from_paths(cls, schedule_path: str | Path, stimuli_dir: str | Path,
                   log_path: str | Path, gain_table_path: str | Path | None = None,
                   clamp_db: int = DEFAULT_GAIN_CLAMP_DB,
                   taps: int = DEFAULT_TAPS) -> "ExperimentService":
        stimuli_dir = Path(stimuli_dir)
        signals, noises = {}, {}
        for sid in ("A", "B", "C"):
            signals[sid] = load_mono_wav(stimuli_dir / f"signal_{sid.lower()}.wav")
            noises[sid] = load_mono_wav(stimuli_dir / f"noise_{sid.lower()}.wav")
        gains = None
        if gain_table_path is not None:
            gains = GainTable.parse(Path(gain_table_path).read_text(encoding="utf-8"))
        return cls(read_schedule(schedule_path), signals, noises, log_path,
                   gains=gains, clamp_db=clamp_db, taps=taps)

    # -- run lifecycle ------------------------------------------------------

    def start_run(self, participant_id: str) -> Run:
        """Open (or resume) the participant's run.

        Replaying the log sets the cursor just past the last committed
        trial, so a crash never repeats or skips a comparison.
        """
        if participant_id not in self.schedule:
            raise ServiceError(f"unknown participant {participant_id!r}", 404)
        with self._runs_lock:
            if participant_id in self.runs:
                return self.runs[participant_id]
            rows = self.schedule[participant_id]
            committed = [r for r in read_log(self.log_path)
                         if r.participant_id == participant_id]
            if len(committed) > len(rows):
                raise ScheduleError(
                    f"log holds {len(committed)} trials for {participant_id}, "
                    f"schedule only {len(rows)}")
            run = Run(participant_id, rows, cursor=len(committed))
            if not run.done:
                run.trial_started_at = _now()
            self.runs[participant_id] = run
            return run

    def _run(self, participant_id: str) -> Run:
        run = self.runs.get(participant_id)
        if run is None:
            raise ServiceError(f"no active run for {participant_id!r}; POST /run first", 404)
        return run

    # -- rendering ----------------------------------------------------------

    def _render(self, run: Run, gain_db: int):
        key = (run.cursor, gain_db)
        if key not in run._audio_cache:
            row = run.current_row
            stimulus = render_trial_pair(
                self.signals[row.condition.signal_id],
                self.noises[row.condition.noise_id],
                row.condition, self.gains,
                variable_gain_db=float(gain_db), taps=self.taps)
            run._audio_cache[key] = (stereo_wav_bytes(stimulus.sound_a),
                                     stereo_wav_bytes(stimulus.sound_b),
                                     stimulus.clip_count_a + stimulus.clip_count_b)
        return run._audio_cache[key]

    def request_audio(self, participant_id: str, which: str) -> bytes:
        """WAV bytes for Sound A (current gain) or Sound B (fixed)."""
        which = which.upper()
        if which not in ("A", "B"):
            raise ServiceError("which must be 'A' or 'B'")
        run = self._run(participant_id)
        with run.lock:
            if run.done:
                raise ServiceError("run is complete; no active trial", 409)
            if which == "A":
                bytes_a, _, _ = self._render(run, run.gain_db)
                run.playback_count_a += 1
                run.phase = PHASE_PLAYING_A
                return bytes_a
            _, bytes_b, _ = self._render(run, 0)
            run.playback_count_b += 1
            run.phase = PHASE_PLAYING_B
            return bytes_b

    # -- control ------------------------------------------------------------

    def adjust_gain(self, participant_id: str, delta: int) -> dict:
        if delta not in (1, -1):
            raise ServiceError("gain moves in steps of +1 or -1 dB")
        run = self._run(participant_id)
        with run.lock:
            if run.done:
                raise ServiceError("run is complete; no active trial", 409)
            proposed = run.gain_db + delta
            clamped = abs(proposed) > self.clamp_db
            if not clamped:
                run.gain_db = proposed
            return {"gain_db": run.gain_db, "clamped": clamped}

    def commit_trial(self, participant_id: str) -> TrialRecord:
        """Record the adjusted gain and advance to the next trial."""
        run = self._run(participant_id)
        with run.lock:
            row = run.current_row
            _, _, clip_count = self._render(run, run.gain_db)
            record = TrialRecord(
                participant_id=run.participant_id,
                session_index=row.session_index,
                trial_index=row.trial_index,
                condition=row.condition,
                initial_gain_db=self.gains.initial_gain_db(
                    row.condition.signal_id, row.condition.noise_id),
                final_variable_gain_db=float(run.gain_db),
                bhld_db=float(run.gain_db),
                scored=row.scored,
                playback_count_a=run.playback_count_a,
                playback_count_b=run.playback_count_b,
                clip_count=clip_count,
                plan_seed=row.seed,
                started_at=run.trial_started_at,
                committed_at=_now(),
            )
            append_record(self.log_path, record)  # cursor moves only after a durable write
            run.cursor += 1
            run.gain_db = 0
            run.phase = PHASE_IDLE
            run.playback_count_a = 0
            run.playback_count_b = 0
            run._audio_cache.clear()
            run.trial_started_at = _now() if not run.done else ""
            return record

    def stop_playback(self, participant_id: str) -> dict:
        run = self._run(participant_id)
        with run.lock:
            if run.phase in (PHASE_PLAYING_A, PHASE_PLAYING_B):
                run.phase = PHASE_STOPPED
            return {"phase": run.phase}

    # -- views --------------------------------------------------------------

    def trial_view(self, participant_id: str) -> dict:
        """What the listener UI may see: counter, session, own gain.

        Deliberately excludes signal/noise/method so the client cannot
        leak the condition.
        """
        run = self._run(participant_id)
        with run.lock:
            view = run.state_summary()
            view["trial_number"] = min(run.cursor + 1, len(run.rows))
            view["session_index"] = (run.rows[run.cursor].session_index
                                     if not run.done else None)
            return view

    def progress(self, participant_id: str) -> dict:
        run = self._run(participant_id)
        return {"participant": run.participant_id, "completed": run.cursor,
                "total": len(run.rows), "done": run.done}


# --------------------------------------------------------------------------
# HTTP layer
# --------------------------------------------------------------------------

class RunRequest(BaseModel):
    participant: str


class GainRequest(BaseModel):
    participant: str
    delta: int


def create_app(service: ExperimentService):
    from fastapi import FastAPI, Response
    from fastapi.middleware.cors import CORSMiddleware
    from fastapi.responses import JSONResponse

    app = FastAPI(title="boosterlab trial service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.service = service

    @app.exception_handler(ServiceError)
    async def service_error(_, exc: ServiceError):
        return JSONResponse({"error": str(exc)}, status_code=exc.status)

    @app.post("/run")
    def post_run(req: RunRequest):
        run = service.start_run(req.participant)
        return {"participant": run.participant_id, "total": len(run.rows),
                "completed": run.cursor, "resumed": run.cursor > 0}

    @app.get("/trial")
    def get_trial(participant: str):
        return service.trial_view(participant)

    @app.get("/audio")
    def get_audio(participant: str, which: str):
        data = service.request_audio(participant, which)
        return Response(content=data, media_type="audio/wav")

    @app.post("/gain")
    def post_gain(req: GainRequest):
        return service.adjust_gain(req.participant, req.delta)

    @app.post("/next")
    def post_next(req: RunRequest):
        service.commit_trial(req.participant)
        return service.progress(req.participant)

    @app.post("/stop")
    def post_stop(req: RunRequest):
        return service.stop_playback(req.participant)

    @app.get("/progress")
    def get_progress(participant: str):
        return service.progress(participant)

    return app
