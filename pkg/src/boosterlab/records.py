"""Trial records and the append-only JSON-lines log."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .dsp import BoosterKind, BoosterMethod
from .errors import ScheduleError
from .planner import Condition

LOG_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TrialRecord:
    """One committed comparison.

    bhld_db is the final variable gain minus the initial variable gain;
    the variable gain always starts at 0, so it equals the final
    adjustment the listener settled on.
    """

    participant_id: str
    session_index: int
    trial_index: int
    condition: Condition
    initial_gain_db: float
    final_variable_gain_db: float
    bhld_db: float
    scored: bool
    playback_count_a: int = 0
    playback_count_b: int = 0
    clip_count: int = 0
    plan_seed: int = 0
    started_at: str = ""
    committed_at: str = ""

    @property
    def is_dummy(self) -> bool:
        return self.condition.method.kind is BoosterKind.ORIGINAL

    def to_json(self) -> str:
        return json.dumps({
            "v": LOG_SCHEMA_VERSION,
            "participant": self.participant_id,
            "session_index": self.session_index,
            "trial_index": self.trial_index,
            "signal": self.condition.signal_id,
            "noise": self.condition.noise_id,
            "method": self.condition.method.key,
            "fc": self.condition.method.fc_hz,
            "initial_gain_db": self.initial_gain_db,
            "variable_gain_db": self.final_variable_gain_db,
            "bhld_db": self.bhld_db,
            "scored": self.scored,
            "playback_a": self.playback_count_a,
            "playback_b": self.playback_count_b,
            "clip_count": self.clip_count,
            "plan_seed": self.plan_seed,
            "started_at": self.started_at,
            "committed_at": self.committed_at,
        })

    @classmethod
    def from_json(cls, line: str) -> "TrialRecord":
        rec = json.loads(line)
        if rec.get("v") != LOG_SCHEMA_VERSION:
            raise ValueError(f"unsupported log schema version {rec.get('v')}")
        method = BoosterMethod.parse(rec["method"])
        return cls(
            participant_id=rec["participant"],
            session_index=int(rec["session_index"]),
            trial_index=int(rec["trial_index"]),
            condition=Condition(rec["signal"], rec["noise"], method),
            initial_gain_db=float(rec["initial_gain_db"]),
            final_variable_gain_db=float(rec["variable_gain_db"]),
            bhld_db=float(rec["bhld_db"]),
            scored=bool(rec["scored"]),
            playback_count_a=int(rec.get("playback_a", 0)),
            playback_count_b=int(rec.get("playback_b", 0)),
            clip_count=int(rec.get("clip_count", 0)),
            plan_seed=int(rec.get("plan_seed", 0)),
            started_at=rec.get("started_at", ""),
            committed_at=rec.get("committed_at", ""),
        )

    def without_timestamps(self) -> "TrialRecord":
        return replace(self, started_at="", committed_at="")


def append_record(path: str | Path, record: TrialRecord) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(record.to_json() + "\n")
        fh.flush()


def read_log(path: str | Path) -> list[TrialRecord]:
    records = []
    path = Path(path)
    if not path.exists():
        return records
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(TrialRecord.from_json(line))
            except (ValueError, KeyError) as exc:
                raise ScheduleError(f"{path}:{lineno}: bad trial record ({exc})") from exc
    return records
