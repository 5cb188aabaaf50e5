"""Time-domain feature extraction for two-channel grasp recordings.

Eight feature families per channel, concatenated channel 1 then channel 2 in a
fixed order: MAV, STD, RMS, SSC, WL, AR(a1..ap), skewness, kurtosis. With the
default AR order 4 this gives a 22-dimensional vector per recording window.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import errors
from .data import ActivityClass, Corpus, Full, Recording, Segment, Window, segment

FAMILIES = ("mav", "std", "rms", "ssc", "wl", "ar", "skew", "kurt")


@dataclass(frozen=True)
class FeatureConfig:
    """Which families to extract and the AR model order."""

    ar_order: int = 4
    include: tuple[str, ...] = FAMILIES

    def __post_init__(self):
        if self.ar_order < 1:
            raise errors.InvalidConfig("ar_order must be >= 1")
        unknown = [f for f in self.include if f not in FAMILIES]
        if unknown:
            raise errors.InvalidConfig(f"unknown feature families: {unknown}")
        if not self.include:
            raise errors.InvalidConfig("include must name at least one family")
        # layout always follows the canonical family order
        ordered = tuple(f for f in FAMILIES if f in self.include)
        object.__setattr__(self, "include", ordered)

    def layout(self, n_channels: int = 2) -> tuple[str, ...]:
        labels = []
        for ch in range(1, n_channels + 1):
            for fam in self.include:
                if fam == "ar":
                    labels += [f"ch{ch}_ar{k}" for k in range(1, self.ar_order + 1)]
                else:
                    labels.append(f"ch{ch}_{fam}")
        return tuple(labels)

    @property
    def dim(self) -> int:
        return len(self.layout())


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Feature values with their layout labels and optional activity label."""

    values: np.ndarray
    layout: tuple[str, ...]
    label: ActivityClass | None = None

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or len(vals) != len(self.layout):
            raise errors.LayoutMismatch(
                f"{len(vals)} values vs {len(self.layout)} layout labels"
            )
        vals = vals.copy() if vals is self.values else vals
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


def _samples(seg) -> np.ndarray:
    if isinstance(seg, Segment):
        return seg.samples
    return np.asarray(seg, dtype=np.float64)


def mav(seg) -> float:
    """Mean absolute value, (1/n) sum |x_i|.

    The usual sEMG reading (mean of absolute values); the alternative
    |mean of values| collapses to ~0 on zero-mean signals.
    """
    x = _samples(seg)
    if len(x) < 1:
        raise errors.SegmentTooShort("mav needs n >= 1")
    return float(np.mean(np.abs(x)))


def std_dev(seg) -> float:
    """Sample standard deviation (n - 1 denominator)."""
    x = _samples(seg)
    if len(x) < 2:
        raise errors.SegmentTooShort("std_dev needs n >= 2")
    return float(np.std(x, ddof=1))


def rms(seg) -> float:
    """Root mean square, sqrt((1/n) sum x_i^2)."""
    x = _samples(seg)
    if len(x) < 1:
        raise errors.SegmentTooShort("rms needs n >= 1")
    return float(np.sqrt(np.mean(x * x)))


def ssc(seg) -> int:
    """Slope sign changes: strict local extrema count.

    Counts interior k with (x_k - x_{k-1}) (x_k - x_{k+1}) > 0, i.e. both
    minima and maxima; plateaus (any equality) are not counted.
    """
    x = _samples(seg)
    if len(x) < 3:
        raise errors.SegmentTooShort("ssc needs n >= 3")
    left = x[1:-1] - x[:-2]
    right = x[1:-1] - x[2:]
    return int(np.count_nonzero(left * right > 0))


def waveform_length(seg) -> float:
    """Cumulative variation, sum |x_{k+1} - x_k|."""
    x = _samples(seg)
    if len(x) < 2:
        raise errors.SegmentTooShort("waveform_length needs n >= 2")
    return float(np.sum(np.abs(np.diff(x))))


def ar_coeffs(seg, p: int) -> tuple[np.ndarray, float]:
    """Autoregressive coefficients a_1..a_p and residual variance.

    Yule-Walker estimates via the Levinson-Durbin recursion on the biased
    autocorrelation of the raw samples (no demeaning, so the coefficients are
    deliberately not shift-invariant). Sign convention: the one-step predictor
    is x_hat[n] = sum_k a_k x[n - k].
    """
    x = _samples(seg)
    n = len(x)
    if p < 1:
        raise errors.InvalidConfig("AR order must be >= 1")
    if n <= p:
        raise errors.SegmentTooShort(f"ar_coeffs needs n > p (n={n}, p={p})")
    r = np.empty(p + 1)
    for k in range(p + 1):
        r[k] = np.dot(x[: n - k], x[k:]) / n
    if r[0] <= 0.0:
        raise errors.DegenerateSegment("zero autocorrelation at lag 0")
    a = np.zeros(p)
    e = float(r[0])
    for m in range(1, p + 1):
        if e <= 0.0:
            raise errors.DegenerateSegment(
                f"prediction error vanished at order {m - 1}; segment is perfectly predictable"
            )
        k = (float(r[m]) - float(np.dot(a[: m - 1], r[m - 1:0:-1]))) / e
        prev = a[: m - 1].copy()
        a[m - 1] = k
        a[: m - 1] = prev - k * prev[::-1]
        e *= 1.0 - k * k
    return a, e


def _central_moments(x: np.ndarray):
    mu = float(np.mean(x))
    d = x - mu
    m2 = float(np.mean(d * d))
    return d, m2


def skewness(seg) -> float:
    """Third standardized central moment, m3 / m2^(3/2) (population moments)."""
    x = _samples(seg)
    if len(x) < 2:
        raise errors.SegmentTooShort("skewness needs n >= 2")
    d, m2 = _central_moments(x)
    if m2 == 0.0:
        raise errors.DegenerateSegment("skewness undefined for zero variance")
    m3 = float(np.mean(d ** 3))
    return m3 / m2 ** 1.5


def kurtosis(seg) -> float:
    """Fourth standardized central moment, m4 / m2^2 (not excess)."""
    x = _samples(seg)
    if len(x) < 2:
        raise errors.SegmentTooShort("kurtosis needs n >= 2")
    d, m2 = _central_moments(x)
    if m2 == 0.0:
        raise errors.DegenerateSegment("kurtosis undefined for zero variance")
    m4 = float(np.mean(d ** 4))
    return m4 / (m2 * m2)


def _segment_features(seg: Segment, cfg: FeatureConfig) -> list[float]:
    out: list[float] = []
    for fam in cfg.include:
        if fam == "mav":
            out.append(mav(seg))
        elif fam == "std":
            out.append(std_dev(seg))
        elif fam == "rms":
            out.append(rms(seg))
        elif fam == "ssc":
            out.append(float(ssc(seg)))
        elif fam == "wl":
            out.append(waveform_length(seg))
        elif fam == "ar":
            coeffs, _ = ar_coeffs(seg, cfg.ar_order)
            out.extend(float(c) for c in coeffs)
        elif fam == "skew":
            out.append(skewness(seg))
        else:
            out.append(kurtosis(seg))
    return out


def extract(rec: Recording, cfg: FeatureConfig = FeatureConfig(),
            window: Window = Full()) -> list[FeatureVector]:
    """One labeled FeatureVector per window position (channel 1 then channel 2)."""
    per_channel = segment(rec, window)
    layout = cfg.layout()
    vectors = []
    for w in range(len(per_channel[0])):
        values: list[float] = []
        for ch, segs in enumerate(per_channel):
            try:
                values += _segment_features(segs[w], cfg)
            except errors.EmgdsError as exc:
                raise type(exc)(
                    f"{rec.subject}/{rec.activity.code}/rep{rec.repetition} "
                    f"ch{ch + 1} window {w}: {exc}"
                ) from exc
        vectors.append(FeatureVector(np.array(values), layout, rec.activity))
    return vectors


# ---------------------------------------------------------------------------
# Feature table (rows keyed by recording and window)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FeatureRow:
    subject: str
    activity: ActivityClass
    repetition: int
    window_index: int
    vector: FeatureVector

    @property
    def key(self) -> tuple[str, ActivityClass, int]:
        return (self.subject, self.activity, self.repetition)


def extract_corpus(corpus: Corpus, cfg: FeatureConfig = FeatureConfig(),
                   window: Window = Full()) -> list[FeatureRow]:
    rows = []
    for rec in corpus.recordings:
        for w, vec in enumerate(extract(rec, cfg, window)):
            rows.append(FeatureRow(rec.subject, rec.activity, rec.repetition, w, vec))
    return rows


FEATURES_META = ["subject", "activity", "repetition", "window_index"]


def write_features_csv(rows: list[FeatureRow], path) -> None:
    if not rows:
        raise errors.EmptyCorpus("no feature rows to write")
    layout = rows[0].vector.layout
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(FEATURES_META + list(layout))
            for row in rows:
                if row.vector.layout != layout:
                    raise errors.LayoutMismatch("feature rows have inconsistent layouts")
                w.writerow(
                    [row.subject, row.activity.code, row.repetition, row.window_index]
                    + [repr(float(v)) for v in row.vector.values]
                )
    except OSError as exc:
        raise errors.IoError(f"cannot write features CSV {path}: {exc}") from exc


def read_features_csv(path) -> list[FeatureRow]:
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise errors.IoError(f"cannot read features CSV {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise errors.MalformedHeader(f"{path}: empty file") from None
        if len(header) <= len(FEATURES_META) or header[: len(FEATURES_META)] != FEATURES_META:
            raise errors.MalformedHeader(
                f"{path}: header must start with {FEATURES_META} and carry feature labels"
            )
        layout = tuple(h.strip() for h in header[len(FEATURES_META):])
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise errors.MalformedRow(
                    f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}"
                )
            activity = ActivityClass.parse(row[1].strip())
            try:
                rep = int(row[2])
                widx = int(row[3])
                values = np.array([float(v) for v in row[4:]])
            except ValueError:
                raise errors.MalformedRow(f"{path}:{line_no}: non-numeric field") from None
            rows.append(
                FeatureRow(row[0].strip(), activity, rep, widx,
                           FeatureVector(values, layout, activity))
            )
    if not rows:
        raise errors.EmptyCorpus(f"{path}: no feature rows")
    return rows
