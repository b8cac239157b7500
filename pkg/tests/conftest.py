import numpy as np
import pytest

from boosterlab.dsp import BoosterMethod
from boosterlab.planner import Condition
from boosterlab.records import TrialRecord

# dummy-condition adjustments per participant (reference screening data);
# P1 has a single 4 but stays in, P9's 5 puts it out
TABLE_DUMMY_ADJUSTMENTS = {
    "P1": [0, 0, 4],
    "P2": [0, 0, 1, 0],
    "P3": [2, -1, -1],
    "P4": [-2, 0, 0],
    "P5": [1, 1, 0, 2],
    "P6": [-1, 1, 1],
    "P7": [0, 0, 0, 1],
    "P8": [1, 0, 0],
    "P9": [2, 5, 1],
    "P10": [-1, -2, 2, 2],
    "P11": [0, 0, 0],
    "P12": [1, 1, 1],
    "P13": [0, 0, 1, 0],
    "P14": [-1, 0, -1],
    "P15": [0, 0, 0, 0],
    "P16": [2, 2, 0],
    "P17": [1, 0, 2],
}


def make_record(pid="P1", signal="A", noise="A", method="original",
                bhld=0.0, scored=True, session=1, trial=0) -> TrialRecord:
    cond = Condition(signal, noise, BoosterMethod.parse(method))
    return TrialRecord(
        participant_id=pid, session_index=session, trial_index=trial,
        condition=cond, initial_gain_db=-21.2,
        final_variable_gain_db=float(bhld), bhld_db=float(bhld), scored=scored)


def dummy_records_from_table(table=None) -> list[TrialRecord]:
    table = table or TABLE_DUMMY_ADJUSTMENTS
    records = []
    for pid, values in table.items():
        for i, v in enumerate(values):
            records.append(make_record(pid, "A", "A", "original", v,
                                       session=1 + i % 3, trial=i))
    return records


@pytest.fixture(scope="session")
def prepared_kit():
    from boosterlab.fixtures import prepared_fixture_kit
    return prepared_fixture_kit()


@pytest.fixture(scope="session")
def short_kit():
    """Sub-second fixtures keep service tests quick."""
    from boosterlab.fixtures import make_noise, make_signal
    from boosterlab.pipeline import (NOISE_TARGET_RMS_DB, SPEECH_TARGET_RMS_DB,
                                     normalize_rms)
    signals, noises = {}, {}
    for sid in "ABC":
        signals[sid], _ = normalize_rms(make_signal(sid, duration_s=0.4),
                                        SPEECH_TARGET_RMS_DB)
        noises[sid], _ = normalize_rms(make_noise(sid, duration_s=0.5),
                                       NOISE_TARGET_RMS_DB)
    return {"signals": signals, "noises": noises}


def white_buffer(n=24000, seed=0, amp=0.5, rate=48000):
    rng = np.random.default_rng(seed)
    from boosterlab.dsp import AudioBuffer
    return AudioBuffer(rng.uniform(-1.0, 1.0, n) * amp, rate)
