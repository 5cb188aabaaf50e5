"""Domain types, corpus CSV I/O, segmentation, splitting, and the synthetic corpus.

The corpus CSV schema is ``subject,activity,repetition,sample_index,ch1,ch2``
with activity codes in {P, L, T, H, S, C}; the sampling rate travels
out-of-band (CLI flag / function argument), never per-row.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from . import errors
from ._seeds import derive_seed


class ActivityClass(enum.Enum):
    """The six grasp classes; definition order is the canonical class order."""

    PALMAR = "P"
    LATERAL = "L"
    TIP = "T"
    HOOK = "H"
    SPHERICAL = "S"
    CYLINDRICAL = "C"

    @classmethod
    def parse(cls, code: str) -> "ActivityClass":
        try:
            return cls(code)
        except ValueError:
            raise errors.UnknownActivityCode(f"unknown activity code {code!r}") from None

    @property
    def code(self) -> str:
        return self.value


CLASS_ORDER: tuple[ActivityClass, ...] = tuple(ActivityClass)


class GroupLabel(enum.IntEnum):
    """Grasp group indicator: power grasps encode as 1, precision as 0."""

    PRECISION = 0
    POWER = 1


# Cylindrical, hook and spherical grasps are whole-hand power grasps; lateral,
# tip and palmar are fingertip precision grasps.
GROUP_OF: dict[ActivityClass, GroupLabel] = {
    ActivityClass.CYLINDRICAL: GroupLabel.POWER,
    ActivityClass.HOOK: GroupLabel.POWER,
    ActivityClass.SPHERICAL: GroupLabel.POWER,
    ActivityClass.LATERAL: GroupLabel.PRECISION,
    ActivityClass.TIP: GroupLabel.PRECISION,
    ActivityClass.PALMAR: GroupLabel.PRECISION,
}


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out is a:
        out = out.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class Recording:
    """One repetition of one activity by one subject: two synchronized channels."""

    subject: str
    activity: ActivityClass
    repetition: int
    rate_hz: float
    channels: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        if self.repetition < 1:
            raise errors.InvalidConfig(f"repetition must be positive, got {self.repetition}")
        if not self.rate_hz > 0:
            raise errors.InvalidConfig(f"rate_hz must be positive, got {self.rate_hz}")
        if len(self.channels) != 2:
            raise errors.InvalidConfig("a recording has exactly 2 channels")
        ch = tuple(_readonly(c) for c in self.channels)
        if ch[0].shape != ch[1].shape or ch[0].ndim != 1:
            raise errors.RaggedChannels(
                f"channel lengths differ: {ch[0].shape} vs {ch[1].shape} "
                f"({self.subject}/{self.activity.code}/rep{self.repetition})"
            )
        if len(ch[0]) < 2:
            raise errors.InvalidConfig("recordings need at least 2 samples per channel")
        object.__setattr__(self, "channels", ch)

    @property
    def n_samples(self) -> int:
        return len(self.channels[0])

    @property
    def key(self) -> tuple[str, ActivityClass, int]:
        return (self.subject, self.activity, self.repetition)


@dataclass(frozen=True, eq=False)
class Segment:
    """A contiguous slice of one channel, with its provenance."""

    samples: np.ndarray
    subject: str
    activity: ActivityClass
    repetition: int
    channel: int
    start: int

    def __post_init__(self):
        object.__setattr__(self, "samples", _readonly(self.samples))

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class Corpus:
    recordings: tuple[Recording, ...]
    provenance: str

    def __post_init__(self):
        recs = tuple(self.recordings)
        keys = [r.key for r in recs]
        if len(set(keys)) != len(keys):
            dupes = sorted({k for k in keys if keys.count(k) > 1})
            raise errors.InvalidConfig(f"duplicate recording keys: {dupes[:3]}")
        object.__setattr__(self, "recordings", recs)

    def __len__(self) -> int:
        return len(self.recordings)


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthConfig:
    """Knobs of the synthetic sEMG generator (deterministic under ``seed``)."""

    subjects: int = 5
    reps_per_activity: int = 30
    rate_hz: float = 500.0
    duration_s: float = 6.0
    seed: int = 42
    power_rms_scale: float = 3.0

    def __post_init__(self):
        if self.subjects < 1:
            raise errors.InvalidConfig("subjects must be >= 1")
        if self.reps_per_activity < 2:
            raise errors.InvalidConfig("reps_per_activity must be >= 2 (train/test split)")
        if not self.rate_hz > 0 or not self.duration_s > 0:
            raise errors.InvalidConfig("rate_hz and duration_s must be positive")
        if not (0 <= self.seed < 2**64):
            raise errors.InvalidConfig("seed must fit in 64 unsigned bits")
        if not self.power_rms_scale > 1:
            raise errors.InvalidConfig("power_rms_scale must exceed 1")
        if self.n_samples < 8:
            raise errors.InvalidConfig("rate_hz * duration_s must give at least 8 samples")

    @property
    def n_samples(self) -> int:
        return int(round(self.rate_hz * self.duration_s))


@dataclass(frozen=True)
class _Signature:
    """Per-activity generator signature (per channel where tupled)."""

    theta: tuple[float, float]   # AR pole angle / pi: spectral peak location
    radius: tuple[float, float]  # AR pole radius: bandwidth
    hold: float                  # envelope plateau fraction of the grasp
    amp: tuple[float, float]     # relative RMS within the group

    def __post_init__(self):
        # per-channel amplitude means are balanced across groups so the
        # power/precision mean-RMS ratio equals power_rms_scale
        assert all(0.0 < t < 1.0 for t in self.theta)
        assert all(0.0 < r < 1.0 for r in self.radius)


# Cross-group pairs (C~T, H~L, S~P) sit close in pole angle, so the groups are
# told apart mainly by amplitude. Within a group, classes differ in pole angle
# by ~1.7 jitter sigmas and in channel balance (ch1-heavy / even / ch2-heavy);
# per-channel amplitude means stay 1.0 in both groups so the group RMS ratio
# equals power_rms_scale exactly on average.
_SIGNATURES: dict[ActivityClass, _Signature] = {
    ActivityClass.CYLINDRICAL: _Signature((0.23, 0.61), (0.93, 0.93), 0.70, (1.16, 0.84)),
    ActivityClass.HOOK: _Signature((0.30, 0.54), (0.92, 0.92), 0.64, (1.00, 1.00)),
    ActivityClass.SPHERICAL: _Signature((0.37, 0.47), (0.91, 0.91), 0.58, (0.84, 1.16)),
    ActivityClass.PALMAR: _Signature((0.385, 0.455), (0.91, 0.91), 0.58, (0.90, 1.10)),
    ActivityClass.LATERAL: _Signature((0.315, 0.525), (0.92, 0.92), 0.64, (1.02, 0.98)),
    ActivityClass.TIP: _Signature((0.245, 0.595), (0.93, 0.93), 0.70, (1.08, 0.92)),
}

_SUBJECT_AMP_SIGMA = 0.06   # log-normal sigma per (subject, channel)
_SUBJECT_THETA_SIGMA = 0.023  # fraction of pi, per (subject, channel)
_REP_AMP_SIGMA = 0.04
_REP_THETA_SIGMA = 0.023


def _envelope(n: int, hold: float) -> np.ndarray:
    """Grasp envelope: half-sine ramp up, plateau, ramp down; unit mean square."""
    ramp = int(round(n * (1.0 - hold) / 2.0))
    ramp = max(0, min(ramp, n // 2))
    e = np.ones(n)
    if ramp > 0:
        up = np.sin(0.5 * np.pi * np.arange(1, ramp + 1) / ramp)
        e[:ramp] = up
        e[n - ramp:] = up[::-1]
    return e / math.sqrt(float(np.mean(e * e)))


def _ar2_stationary_std(phi1: float, phi2: float) -> float:
    var = (1.0 - phi2) / ((1.0 + phi2) * ((1.0 - phi2) ** 2 - phi1 ** 2))
    return math.sqrt(var)


def _colored_noise(rng: np.random.Generator, n: int, theta_pi: float, radius: float) -> np.ndarray:
    """Unit-variance AR(2) noise with spectral peak near theta_pi * Nyquist."""
    theta = math.pi * min(max(theta_pi, 0.02), 0.98)
    phi1 = 2.0 * radius * math.cos(theta)
    phi2 = -radius * radius
    white = rng.standard_normal(n)
    x = lfilter([1.0], [1.0, -phi1, -phi2], white)
    return x / _ar2_stationary_std(phi1, phi2)


def synth_corpus(cfg: SynthConfig) -> Corpus:
    """Generate a labeled corpus of amplitude-modulated colored-noise grasps.

    Each (subject, activity, repetition, channel) gets AR(2) noise whose pole
    angle, pole radius, envelope shape and RMS follow the activity's signature,
    perturbed by per-subject and per-repetition jitters. Power-group activities
    are ``cfg.power_rms_scale`` louder than precision-group ones on average.
    Deterministic function of ``cfg.seed``.
    """
    n = cfg.n_samples
    recordings = []
    for s_idx in range(cfg.subjects):
        subject = f"subj{s_idx + 1}"
        srng = np.random.default_rng(derive_seed(cfg.seed, "subject", s_idx))
        subj_amp = np.exp(srng.normal(0.0, _SUBJECT_AMP_SIGMA, size=2))
        subj_theta = srng.normal(0.0, _SUBJECT_THETA_SIGMA, size=2)
        for activity in CLASS_ORDER:
            sig = _SIGNATURES[activity]
            scale = cfg.power_rms_scale if GROUP_OF[activity] is GroupLabel.POWER else 1.0
            env = _envelope(n, sig.hold)
            for rep in range(1, cfg.reps_per_activity + 1):
                rrng = np.random.default_rng(
                    derive_seed(cfg.seed, "rec", s_idx, activity.code, rep)
                )
                channels = []
                for ch in range(2):
                    amp_jit = math.exp(rrng.normal(0.0, _REP_AMP_SIGMA))
                    theta_jit = rrng.normal(0.0, _REP_THETA_SIGMA)
                    theta = sig.theta[ch] + subj_theta[ch] + theta_jit
                    x = _colored_noise(rrng, n, theta, sig.radius[ch])
                    rms = scale * sig.amp[ch] * subj_amp[ch] * amp_jit
                    channels.append(rms * env * x)
                recordings.append(
                    Recording(subject, activity, rep, cfg.rate_hz, (channels[0], channels[1]))
                )
    return Corpus(tuple(recordings), provenance=f"synthetic(seed={cfg.seed})")


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

CSV_HEADER = ["subject", "activity", "repetition", "sample_index", "ch1", "ch2"]


def write_csv(corpus: Corpus, path) -> None:
    """Serialize a corpus; floats use repr() so re-ingestion is exact."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            order = {a: i for i, a in enumerate(CLASS_ORDER)}
            recs = sorted(
                corpus.recordings, key=lambda r: (r.subject, order[r.activity], r.repetition)
            )
            for rec in recs:
                ch1, ch2 = rec.channels
                for i in range(rec.n_samples):
                    w.writerow(
                        [rec.subject, rec.activity.code, rec.repetition, i,
                         repr(float(ch1[i])), repr(float(ch2[i]))]
                    )
    except OSError as exc:
        raise errors.IoError(f"cannot write corpus CSV {path}: {exc}") from exc


def ingest_csv(path, rate_hz: float = 500.0) -> Corpus:
    """Parse a corpus CSV; the sampling rate is supplied out-of-band."""
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise errors.IoError(f"cannot read corpus CSV {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise errors.MalformedHeader(f"{path}: empty file") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise errors.MalformedHeader(
                f"{path}: header {header!r} does not match {CSV_HEADER!r}"
            )
        groups: dict[tuple[str, ActivityClass, int], list[tuple[int, str, str]]] = {}
        group_order: list[tuple[str, ActivityClass, int]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 6:
                raise errors.MalformedRow(f"{path}:{line_no}: expected 6 fields, got {len(row)}")
            subject, code, rep_s, idx_s, c1, c2 = (v.strip() for v in row)
            activity = ActivityClass.parse(code)
            try:
                rep = int(rep_s)
                idx = int(idx_s)
            except ValueError:
                raise errors.MalformedRow(
                    f"{path}:{line_no}: repetition/sample_index must be integers"
                ) from None
            key = (subject, activity, rep)
            if key not in groups:
                groups[key] = []
                group_order.append(key)
            groups[key].append((idx, c1, c2))
        if not groups:
            raise errors.EmptyCorpus(f"{path}: no data rows")

    recordings = []
    for key in group_order:
        subject, activity, rep = key
        rows = sorted(groups[key], key=lambda t: t[0])
        indices = [t[0] for t in rows]
        if indices != list(range(len(rows))):
            raise errors.MalformedRow(
                f"{path}: sample_index not 0-based contiguous for "
                f"{subject}/{activity.code}/rep{rep}"
            )
        ch1, ch2 = [], []
        for idx, c1, c2 in rows:
            for cell, chan in ((c1, ch1), (c2, ch2)):
                if cell == "":
                    continue
                try:
                    chan.append(float(cell))
                except ValueError:
                    raise errors.MalformedRow(
                        f"{path}: non-numeric sample {cell!r} at "
                        f"{subject}/{activity.code}/rep{rep}/index{idx}"
                    ) from None
        if len(ch1) != len(ch2):
            raise errors.RaggedChannels(
                f"{path}: {subject}/{activity.code}/rep{rep} has "
                f"{len(ch1)} ch1 samples vs {len(ch2)} ch2 samples"
            )
        recordings.append(
            Recording(subject, activity, rep, rate_hz, (np.asarray(ch1), np.asarray(ch2)))
        )
    return Corpus(tuple(recordings), provenance=f"ingested({path})")


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Full:
    """One segment per channel spanning the whole recording."""


@dataclass(frozen=True)
class Sliding:
    length: int
    step: int

    def __post_init__(self):
        if self.length < 3:
            raise errors.InvalidConfig("sliding window length must be >= 3")
        if self.step < 1:
            raise errors.InvalidConfig("sliding window step must be >= 1")


Window = Full | Sliding


def segment(rec: Recording, window: Window = Full()) -> list[list[Segment]]:
    """Cut a recording into per-channel segments.

    Returns one list per channel. ``Full`` yields a single segment per channel;
    ``Sliding(length, step)`` yields floor((n - length) / step) + 1 segments at
    offsets 0, step, 2*step, ...
    """
    n = rec.n_samples
    if isinstance(window, Sliding) and window.length > n:
        raise errors.WindowTooLong(
            f"window length {window.length} exceeds recording length {n}"
        )
    per_channel = []
    for ch, samples in enumerate(rec.channels):
        if isinstance(window, Full):
            offsets = [0]
            length = n
        else:
            length = window.length
            count = (n - length) // window.step + 1
            offsets = [k * window.step for k in range(count)]
        per_channel.append(
            [
                Segment(samples[o:o + length], rec.subject, rec.activity,
                        rec.repetition, ch, o)
                for o in offsets
            ]
        )
    return per_channel


# ---------------------------------------------------------------------------
# Train/test splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Holdout:
    train_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise errors.InvalidConfig("train_fraction must lie strictly between 0 and 1")


@dataclass(frozen=True)
class KFold:
    k: int
    seed: int

    def __post_init__(self):
        if self.k < 2:
            raise errors.InvalidConfig("k must be >= 2")


Key = tuple[str, ActivityClass, int]


def _key_order(key: Key):
    return (key[0], CLASS_ORDER.index(key[1]), key[2])


def _cells(keys) -> dict[tuple[str, ActivityClass], list[int]]:
    cells: dict[tuple[str, ActivityClass], list[int]] = {}
    for subject, activity, rep in keys:
        cells.setdefault((subject, activity), []).append(rep)
    order = {a: i for i, a in enumerate(CLASS_ORDER)}
    return {
        cell: sorted(reps)
        for cell, reps in sorted(cells.items(), key=lambda kv: (kv[0][0], order[kv[0][1]]))
    }


def _shuffled_reps(cell, reps, seed) -> list[int]:
    subject, activity = cell
    rng = np.random.default_rng(derive_seed(seed, "split", subject, activity.code))
    return [reps[i] for i in rng.permutation(len(reps))]


def split_keys(keys, protocol: Holdout | KFold):
    """Stratified split of distinct (subject, activity, repetition) keys.

    Every (subject, activity) cell contributes proportionally; deterministic
    under the protocol seed. Holdout returns (train, test) key tuples; KFold
    returns a list of k such pairs.
    """
    distinct = sorted(set(keys), key=_key_order)
    if not distinct:
        raise errors.InsufficientRepetitions("no keys to split")
    cells = _cells(distinct)
    for cell, reps in cells.items():
        if len(reps) < 2:
            raise errors.InsufficientRepetitions(
                f"cell {cell[0]}/{cell[1].code} has {len(reps)} repetition(s); need >= 2"
            )
    if isinstance(protocol, Holdout):
        train, test = [], []
        for cell, reps in cells.items():
            shuffled = _shuffled_reps(cell, reps, protocol.seed)
            n_train = int(math.floor(protocol.train_fraction * len(reps)))
            if n_train < 1 or n_train >= len(reps):
                raise errors.InsufficientRepetitions(
                    f"cell {cell[0]}/{cell[1].code}: fraction {protocol.train_fraction} "
                    f"of {len(reps)} reps leaves an empty side"
                )
            train += [(cell[0], cell[1], r) for r in shuffled[:n_train]]
            test += [(cell[0], cell[1], r) for r in shuffled[n_train:]]
        return tuple(sorted(train, key=_key_order)), tuple(sorted(test, key=_key_order))
    assert isinstance(protocol, KFold)
    for cell, reps in cells.items():
        if len(reps) < protocol.k:
            raise errors.InsufficientRepetitions(
                f"cell {cell[0]}/{cell[1].code} has {len(reps)} reps < k={protocol.k}"
            )
    fold_tests: list[list[Key]] = [[] for _ in range(protocol.k)]
    for cell, reps in cells.items():
        shuffled = _shuffled_reps(cell, reps, protocol.seed)
        for i, rep in enumerate(shuffled):
            fold_tests[i % protocol.k].append((cell[0], cell[1], rep))
    folds = []
    all_keys = set(distinct)
    for test in fold_tests:
        test_set = set(test)
        folds.append(
            (
                tuple(sorted(all_keys - test_set, key=_key_order)),
                tuple(sorted(test, key=_key_order)),
            )
        )
    return folds


def split(corpus: Corpus, protocol: Holdout | KFold):
    """Split recording indices; see ``split_keys`` for the semantics."""
    by_key = {rec.key: i for i, rec in enumerate(corpus.recordings)}
    result = split_keys(by_key.keys(), protocol)
    if isinstance(protocol, Holdout):
        train, test = result
        return tuple(by_key[k] for k in train), tuple(by_key[k] for k in test)
    return [
        (tuple(by_key[k] for k in train), tuple(by_key[k] for k in test))
        for train, test in result
    ]
