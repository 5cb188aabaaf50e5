"""Single-stage and dual-stage grasp classifiers, evaluation, persistence.

Single stage: one PCA + a 6-class one-vs-rest SVM. Dual stage: a binary
power/precision SVM routes each sample to one of two 3-class SVMs, every stage
with its own independently fitted PCA.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from datetime import datetime, timezone

import numpy as np

from . import errors, svm
from .data import CLASS_ORDER, GROUP_OF, ActivityClass, GroupLabel
from .features import FeatureConfig, FeatureVector
from ._seeds import derive_seed
from .pca import PcaModel, Retention, VarianceFraction, fit_pca, project_many
from .svm import KernelSpec, MulticlassSvmModel, SvmModel

MODEL_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1

CLASS_CODES = tuple(a.code for a in CLASS_ORDER)
POWER_CODES = tuple(a.code for a in CLASS_ORDER if GROUP_OF[a] is GroupLabel.POWER)
PRECISION_CODES = tuple(a.code for a in CLASS_ORDER if GROUP_OF[a] is GroupLabel.PRECISION)


def group_of(activity: ActivityClass) -> GroupLabel:
    """Power grasps (C, H, S) map to 1; precision grasps (L, T, P) map to 0."""
    return GROUP_OF[activity]


@dataclass(frozen=True)
class TrainSettings:
    """Hyperparameters shared by both architectures."""

    retain: Retention = VarianceFraction(0.95)
    kernel: KernelSpec = KernelSpec()
    c: float = svm.DEFAULT_C
    tol: float = svm.DEFAULT_TOL
    max_passes: int = svm.DEFAULT_MAX_PASSES
    seed: int = 42


@dataclass(frozen=True, eq=False)
class SingleStageModel:
    pca: PcaModel
    classifier: MulticlassSvmModel
    feature_config: FeatureConfig

    @property
    def mode(self) -> str:
        return "single"


@dataclass(frozen=True, eq=False)
class StagePair:
    pca: PcaModel
    classifier: SvmModel | MulticlassSvmModel


@dataclass(frozen=True, eq=False)
class DualStageModel:
    stage1: StagePair          # binary power-vs-precision
    stage2_power: StagePair    # 3-class over C, H, S
    stage2_precision: StagePair  # 3-class over P, L, T
    feature_config: FeatureConfig

    @property
    def mode(self) -> str:
        return "dual"


def _check_training_vectors(vectors) -> list[FeatureVector]:
    vecs = list(vectors)
    if not vecs:
        raise errors.TooFewSamples("no training vectors")
    layout = vecs[0].layout
    for v in vecs:
        if v.label is None:
            raise errors.InvalidConfig("training vectors must be labeled")
        if v.layout != layout:
            raise errors.LayoutMismatch("training vectors have mixed layouts")
    present = {v.label for v in vecs}
    missing = [a.code for a in CLASS_ORDER if a not in present]
    if missing:
        raise errors.MissingClass(f"training set lacks classes: {missing}")
    return vecs


def _infer_feature_config(layout: tuple[str, ...]) -> FeatureConfig:
    ar_order = sum(1 for name in layout if name.startswith("ch1_ar"))
    families = []
    for name in layout:
        if not name.startswith("ch1_"):
            continue
        fam = "ar" if name[4:].startswith("ar") else name[4:]
        if fam not in families:
            families.append(fam)
    cfg = FeatureConfig(ar_order=ar_order if ar_order else 4, include=tuple(families))
    if cfg.layout() != layout:
        raise errors.LayoutMismatch(f"layout {layout} is not a feature layout")
    return cfg


def train_single(vectors, settings: TrainSettings = TrainSettings()) -> SingleStageModel:
    """Fit one PCA on all training vectors, then a 6-class one-vs-rest SVM."""
    vecs = _check_training_vectors(vectors)
    pca = fit_pca(vecs, settings.retain)
    x = project_many(pca, vecs)
    classifier = svm.train_multiclass(
        x, [v.label.code for v in vecs], class_order=CLASS_CODES,
        kernel=settings.kernel, c=settings.c, tol=settings.tol,
        max_passes=settings.max_passes, seed=derive_seed(settings.seed, "single"),
    )
    return SingleStageModel(pca, classifier, _infer_feature_config(vecs[0].layout))


def train_dual(vectors, settings: TrainSettings = TrainSettings()) -> DualStageModel:
    """Fit stage-1 binary routing plus per-group 3-class models.

    Stage 2 trains on the true group partitions (not stage-1 predictions), the
    standard hierarchical-classifier choice; each stage fits its own PCA.
    """
    vecs = _check_training_vectors(vectors)

    pca1 = fit_pca(vecs, settings.retain)
    x1 = project_many(pca1, vecs)
    y1 = np.array([1.0 if group_of(v.label) is GroupLabel.POWER else -1.0 for v in vecs])
    stage1 = svm.train_binary(
        x1, y1, kernel=settings.kernel, c=settings.c, tol=settings.tol,
        max_passes=settings.max_passes, seed=derive_seed(settings.seed, "stage1"),
        label_names=("precision", "power"),
    )

    def stage2(group: GroupLabel, codes: tuple[str, ...], tag: str) -> StagePair:
        subset = [v for v in vecs if group_of(v.label) is group]
        pca = fit_pca(subset, settings.retain)
        x = project_many(pca, subset)
        classifier = svm.train_multiclass(
            x, [v.label.code for v in subset], class_order=codes,
            kernel=settings.kernel, c=settings.c, tol=settings.tol,
            max_passes=settings.max_passes, seed=derive_seed(settings.seed, "stage2", tag),
        )
        return StagePair(pca, classifier)

    return DualStageModel(
        stage1=StagePair(pca1, stage1),
        stage2_power=stage2(GroupLabel.POWER, POWER_CODES, "power"),
        stage2_precision=stage2(GroupLabel.PRECISION, PRECISION_CODES, "precision"),
        feature_config=_infer_feature_config(vecs[0].layout),
    )


def _check_layout(model, v) -> np.ndarray:
    expected = model.feature_config.layout()
    if isinstance(v, FeatureVector):
        if v.layout != expected:
            raise errors.LayoutMismatch(
                f"vector layout does not match the model's ({len(v.layout)} vs "
                f"{len(expected)} features)"
            )
        return v.values
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or len(arr) != len(expected):
        raise errors.LayoutMismatch(
            f"expected a {len(expected)}-dimensional vector, got shape {arr.shape}"
        )
    return arr


def predict_single(model: SingleStageModel, v) -> ActivityClass:
    arr = _check_layout(model, v)
    x = project_many(model.pca, [arr])
    return ActivityClass.parse(svm.predict_multiclass_many(model.classifier, x)[0])


def predict_dual(model: DualStageModel, v) -> tuple[ActivityClass, GroupLabel]:
    """Stage-1 picks the group; that group's stage-2 model picks the class."""
    arr = _check_layout(model, v)
    score = svm.decision_many(model.stage1.classifier,
                              project_many(model.stage1.pca, [arr]))[0]
    group = GroupLabel.POWER if score >= 0.0 else GroupLabel.PRECISION
    pair = model.stage2_power if group is GroupLabel.POWER else model.stage2_precision
    x = project_many(pair.pca, [arr])
    code = svm.predict_multiclass_many(pair.classifier, x)[0]
    return ActivityClass.parse(code), group


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EvalReport:
    """Confusion matrix (rows true, columns predicted; order P,L,T,H,S,C)."""

    mode: str
    confusion: np.ndarray
    accuracy: float
    n_test: int
    stage1_accuracy: float | None = None
    stage2_power_accuracy_routed: float | None = None
    stage2_power_accuracy_all: float | None = None
    stage2_precision_accuracy_routed: float | None = None
    stage2_precision_accuracy_all: float | None = None
    split_descriptor: dict | None = None
    seed: int | None = None
    config: dict | None = None

    def __post_init__(self):
        conf = np.asarray(self.confusion, dtype=np.int64).copy()
        if conf.shape != (6, 6):
            raise errors.DimensionMismatch("confusion matrix must be 6x6")
        conf.flags.writeable = False
        object.__setattr__(self, "confusion", conf)
        total = int(conf.sum())
        if total != self.n_test:
            raise errors.EmgdsError("confusion entries must sum to the test size")
        if total and self.accuracy != int(np.trace(conf)) / total:
            raise errors.EmgdsError("accuracy must equal trace / sum")

    def to_dict(self) -> dict:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "mode": self.mode,
            "class_order": list(CLASS_CODES),
            "confusion": self.confusion.tolist(),
            "accuracy": self.accuracy,
            "n_test": self.n_test,
            "stage1_accuracy": self.stage1_accuracy,
            "stage2_power_accuracy_routed": self.stage2_power_accuracy_routed,
            "stage2_power_accuracy_all": self.stage2_power_accuracy_all,
            "stage2_precision_accuracy_routed": self.stage2_precision_accuracy_routed,
            "stage2_precision_accuracy_all": self.stage2_precision_accuracy_all,
            "split": self.split_descriptor,
            "seed": self.seed,
            "config": self.config,
            "timestamp": _timestamp(),
        }


def _timestamp() -> str | None:
    # honors SOURCE_DATE_EPOCH so identical runs emit byte-identical reports
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()


def _ratio(hits: int, total: int) -> float | None:
    return hits / total if total else None


def evaluate(model, test_vectors) -> EvalReport:
    """Confusion matrix and accuracies of a trained model on labeled vectors."""
    vecs = list(test_vectors)
    if not vecs:
        raise errors.EmptyTestSet("evaluate needs at least one test vector")
    for v in vecs:
        if not isinstance(v, FeatureVector) or v.label is None:
            raise errors.InvalidConfig("test vectors must be labeled FeatureVectors")
        _check_layout(model, v)
    true_idx = np.array([CLASS_ORDER.index(v.label) for v in vecs])
    index_of = {code: k for k, code in enumerate(CLASS_CODES)}

    if isinstance(model, SingleStageModel):
        x = project_many(model.pca, vecs)
        pred_codes = svm.predict_multiclass_many(model.classifier, x)
        pred_idx = np.array([index_of[c] for c in pred_codes])
        confusion = np.zeros((6, 6), dtype=np.int64)
        np.add.at(confusion, (true_idx, pred_idx), 1)
        total = len(vecs)
        return EvalReport(
            mode="single", confusion=confusion,
            accuracy=int(np.trace(confusion)) / total, n_test=total,
        )

    if not isinstance(model, DualStageModel):
        raise errors.InvalidConfig(f"cannot evaluate object of type {type(model)!r}")

    x1 = project_many(model.stage1.pca, vecs)
    scores = svm.decision_many(model.stage1.classifier, x1)
    pred_power = scores >= 0.0
    true_power = np.array([group_of(v.label) is GroupLabel.POWER for v in vecs])

    pred_idx = np.empty(len(vecs), dtype=np.int64)
    for is_power, pair in ((True, model.stage2_power), (False, model.stage2_precision)):
        mask = pred_power == is_power
        if not mask.any():
            continue
        subset = [vecs[k] for k in np.flatnonzero(mask)]
        codes = svm.predict_multiclass_many(pair.classifier,
                                            project_many(pair.pca, subset))
        pred_idx[mask] = [index_of[c] for c in codes]

    confusion = np.zeros((6, 6), dtype=np.int64)
    np.add.at(confusion, (true_idx, pred_idx), 1)
    total = len(vecs)
    correct = pred_idx == true_idx
    routed = pred_power == true_power

    def stage2_stats(power: bool):
        in_group = true_power == power
        routed_in_group = in_group & routed
        return (
            _ratio(int((correct & routed_in_group).sum()), int(routed_in_group.sum())),
            _ratio(int((correct & in_group).sum()), int(in_group.sum())),
        )

    power_routed, power_all = stage2_stats(True)
    prec_routed, prec_all = stage2_stats(False)
    return EvalReport(
        mode="dual", confusion=confusion,
        accuracy=int(np.trace(confusion)) / total, n_test=total,
        stage1_accuracy=int(routed.sum()) / total,
        stage2_power_accuracy_routed=power_routed,
        stage2_power_accuracy_all=power_all,
        stage2_precision_accuracy_routed=prec_routed,
        stage2_precision_accuracy_all=prec_all,
    )


def with_run_metadata(report: EvalReport, split_descriptor=None, seed=None,
                      config=None) -> EvalReport:
    return replace(report, split_descriptor=split_descriptor, seed=seed, config=config)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _stage_dict(pair: StagePair) -> dict:
    return {"pca": pair.pca.to_dict(), "svm": pair.classifier.to_dict()}


def model_document(model, split_descriptor: dict | None = None) -> dict:
    cfg = model.feature_config
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "mode": model.mode,
        "feature_config": {"ar_order": cfg.ar_order, "include": list(cfg.include)},
        "class_order": list(CLASS_CODES),
        "split": split_descriptor,
    }
    if isinstance(model, SingleStageModel):
        doc["pca"] = model.pca.to_dict()
        doc["svm"] = model.classifier.to_dict()
    else:
        doc["stage1"] = _stage_dict(model.stage1)
        doc["stage2_power"] = _stage_dict(model.stage2_power)
        doc["stage2_precision"] = _stage_dict(model.stage2_precision)
    return doc


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_model(model, path, split_descriptor: dict | None = None) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps_json(model_document(model, split_descriptor)))
    except OSError as exc:
        raise errors.IoError(f"cannot write model file {path}: {exc}") from exc


def load_model(path):
    """Load a model file; returns (model, split_descriptor_or_None)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise errors.IoError(f"cannot read model file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise errors.SchemaError(f"{path}: missing format_version")
    if doc["format_version"] != MODEL_FORMAT_VERSION:
        raise errors.VersionMismatch(
            f"{path}: format_version {doc['format_version']} unsupported "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    try:
        cfg_doc = doc["feature_config"]
        cfg = FeatureConfig(ar_order=int(cfg_doc["ar_order"]),
                            include=tuple(cfg_doc["include"]))
        mode = doc["mode"]
        if mode == "single":
            model = SingleStageModel(
                pca=PcaModel.from_dict(doc["pca"]),
                classifier=MulticlassSvmModel.from_dict(doc["svm"]),
                feature_config=cfg,
            )
        elif mode == "dual":
            def pair(key, binary=False):
                stage = doc[key]
                clf = (SvmModel.from_dict(stage["svm"]) if binary
                       else MulticlassSvmModel.from_dict(stage["svm"]))
                return StagePair(PcaModel.from_dict(stage["pca"]), clf)

            model = DualStageModel(
                stage1=pair("stage1", binary=True),
                stage2_power=pair("stage2_power"),
                stage2_precision=pair("stage2_precision"),
                feature_config=cfg,
            )
        else:
            raise errors.SchemaError(f"{path}: unknown mode {mode!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise errors.SchemaError(f"{path}: malformed model document: {exc}") from exc
    return model, doc.get("split")


def save_report(report: EvalReport, path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(dumps_json(report.to_dict()))
    except OSError as exc:
        raise errors.IoError(f"cannot write report {path}: {exc}") from exc
