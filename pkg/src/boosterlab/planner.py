"""Condition grid and balanced randomized session planning.

The 72-condition grid (3 signals x 3 noises x 8 methods) is covered by a
block of eight nine-trial "tentative sessions": every (signal, noise)
pair appears once per session, and the methods rotate across sessions so
the block as a whole covers each condition exactly once.  Each
participant is assigned three tentative sessions plus a practice
session; the 27 scored trials are then shuffled into presentation order.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .dsp import BoosterMethod
from .errors import ParameterError, ScheduleError

SIGNAL_IDS = ("A", "B", "C")
NOISE_IDS = ("A", "B", "C")

SCHEDULE_SCHEMA_VERSION = 1

TRIALS_PER_SESSION = 9
SESSIONS_PER_BLOCK = 8
SCORED_SESSIONS_PER_PARTICIPANT = 3


@dataclass(frozen=True)
class Condition:
    """One experimental condition: which speech, which noise, which method."""

    signal_id: str
    noise_id: str
    method: BoosterMethod

    def __post_init__(self):
        if self.signal_id not in SIGNAL_IDS:
            raise ParameterError(f"unknown signal id {self.signal_id!r}")
        if self.noise_id not in NOISE_IDS:
            raise ParameterError(f"unknown noise id {self.noise_id!r}")

    @property
    def key(self) -> str:
        return f"{self.signal_id}/{self.noise_id}/{self.method.key}"


@dataclass(frozen=True)
class TentativeSession:
    """Nine trials: all (signal, noise) pairs once, 8 distinct methods
    with exactly one method repeated."""

    trials: tuple[Condition, ...]

    def __post_init__(self):
        if len(self.trials) != TRIALS_PER_SESSION:
            raise ParameterError("a tentative session holds exactly 9 trials")
        pairs = [(t.signal_id, t.noise_id) for t in self.trials]
        if len(set(pairs)) != TRIALS_PER_SESSION:
            raise ParameterError("each (signal, noise) pair must appear exactly once")
        methods = {t.method.key for t in self.trials}
        if len(methods) != SESSIONS_PER_BLOCK:
            raise ParameterError("a session must contain exactly 8 distinct methods")


@dataclass(frozen=True)
class ParticipantPlan:
    participant_id: str
    practice: TentativeSession
    sessions: tuple[TentativeSession, ...]
    playlist: tuple[Condition, ...]
    session_indices: tuple[int, ...]
    practice_index: int
    seed: int

    def __post_init__(self):
        if len(self.sessions) != SCORED_SESSIONS_PER_PARTICIPANT:
            raise ParameterError("a participant is assigned exactly 3 scored sessions")
        if len(self.playlist) != SCORED_SESSIONS_PER_PARTICIPANT * TRIALS_PER_SESSION:
            raise ParameterError("playlist must cover the 27 scored trials")


def enumerate_conditions() -> list[Condition]:
    """All 72 conditions in canonical (signal, noise, method) order."""
    return [Condition(s, n, m)
            for s in SIGNAL_IDS
            for n in NOISE_IDS
            for m in BoosterMethod.all_methods()]


def build_tentative_block(seed: int) -> list[TentativeSession]:
    """Eight sessions jointly covering all 72 conditions exactly once.

    Each (signal, noise) row is given a cyclic shift through a shuffled
    method order; the shifts are a permutation of 0..7 plus one repeat,
    so every session sees 8 distinct methods with a single pigeonholed
    duplicate, and each row meets every method exactly once across the
    block.
    """
    rng = random.Random(seed)
    methods = BoosterMethod.all_methods()
    rng.shuffle(methods)

    rows = [(s, n) for s in SIGNAL_IDS for n in NOISE_IDS]
    shifts = list(range(SESSIONS_PER_BLOCK))
    shifts.append(rng.randrange(SESSIONS_PER_BLOCK))
    rng.shuffle(shifts)

    sessions = []
    for j in range(SESSIONS_PER_BLOCK):
        trials = tuple(
            Condition(s, n, methods[(j + shifts[r]) % SESSIONS_PER_BLOCK])
            for r, (s, n) in enumerate(rows))
        sessions.append(TentativeSession(trials))
    return sessions


def build_participant_plan(participant_id: str, block: list[TentativeSession],
                           which: tuple[int, int, int] | list[int],
                           seed: int) -> ParticipantPlan:
    """Assign three tentative sessions and shuffle their 27 trials.

    The practice session reuses the lowest-numbered session not assigned
    to this participant; practice trials are never scored.
    """
    which = tuple(which)
    if len(which) != SCORED_SESSIONS_PER_PARTICIPANT or len(set(which)) != len(which):
        raise ParameterError("three distinct session indices are required")
    if any(i < 0 or i >= len(block) for i in which):
        raise ParameterError("session index out of range")

    practice_index = next(i for i in range(len(block)) if i not in which)
    scored = [trial for i in which for trial in block[i].trials]
    rng = random.Random(seed)
    rng.shuffle(scored)

    return ParticipantPlan(
        participant_id=participant_id,
        practice=block[practice_index],
        sessions=tuple(block[i] for i in which),
        playlist=tuple(scored),
        session_indices=which,
        practice_index=practice_index,
        seed=seed,
    )


def rotation_assignments(n_participants: int) -> list[tuple[int, int, int]]:
    """Round-robin assignment of tentative sessions to participants.

    Sixteen participants at three sessions each walk the 8 sessions
    evenly: 48 slots, six uses per session, hence six scored trials per
    condition.
    """
    return [tuple((3 * p + k) % SESSIONS_PER_BLOCK for k in range(3))
            for p in range(n_participants)]


@dataclass(frozen=True)
class ScheduleRow:
    """One presented trial, in presentation order within a participant."""

    participant: str
    session_index: int  # 0 = practice, 1..3 = scored presentation chunks
    trial_index: int
    condition: Condition
    seed: int

    @property
    def scored(self) -> bool:
        return self.session_index > 0


def plan_to_rows(plan: ParticipantPlan) -> list[ScheduleRow]:
    rows = [ScheduleRow(plan.participant_id, 0, i, trial, plan.seed)
            for i, trial in enumerate(plan.practice.trials)]
    for k, trial in enumerate(plan.playlist):
        rows.append(ScheduleRow(plan.participant_id,
                                1 + k // TRIALS_PER_SESSION,
                                k % TRIALS_PER_SESSION,
                                trial, plan.seed))
    return rows


def build_schedule(participant_ids: list[str], seed: int,
                   assignments: list[tuple[int, int, int]] | None = None
                   ) -> list[ScheduleRow]:
    """Block + per-participant plans + flattened presentation rows."""
    block = build_tentative_block(seed)
    if assignments is None:
        assignments = rotation_assignments(len(participant_ids))
    if len(assignments) < len(participant_ids):
        raise ParameterError("not enough session assignments for participants")
    master = random.Random(seed)
    rows = []
    for pid, which in zip(participant_ids, assignments):
        plan = build_participant_plan(pid, block, which, master.randrange(2 ** 31))
        rows.extend(plan_to_rows(plan))
    return rows


def write_schedule(path: str | Path, rows: list[ScheduleRow]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps({
                "v": SCHEDULE_SCHEMA_VERSION,
                "participant": row.participant,
                "session_index": row.session_index,
                "trial_index": row.trial_index,
                "signal": row.condition.signal_id,
                "noise": row.condition.noise_id,
                "method": row.condition.method.key,
                "fc": row.condition.method.fc_hz,
                "seed": row.seed,
            }) + "\n")


def read_schedule(path: str | Path) -> list[ScheduleRow]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                if rec.get("v") != SCHEDULE_SCHEMA_VERSION:
                    raise ValueError(f"unsupported schema version {rec.get('v')}")
                method = BoosterMethod.parse(rec["method"])
                if method.fc_hz != rec["fc"]:
                    raise ValueError("method/fc mismatch")
                rows.append(ScheduleRow(
                    participant=rec["participant"],
                    session_index=int(rec["session_index"]),
                    trial_index=int(rec["trial_index"]),
                    condition=Condition(rec["signal"], rec["noise"], method),
                    seed=int(rec["seed"]),
                ))
            except (KeyError, ValueError, ParameterError) as exc:
                raise ScheduleError(f"{path}:{lineno}: bad schedule row ({exc})") from exc
    return rows
