"""Soft-margin kernel SVM trained by SMO, with a one-vs-rest multiclass wrapper.

The SMO inner loop runs on a compiled extension when available and on a
mirrored pure-Python kernel otherwise; both produce bit-identical models.
``EMGDS_SMO_BACKEND=python|cython`` forces the choice (benchmarks, debugging).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

from . import _smo_py, errors
from ._seeds import derive_seed

_FORCED = os.environ.get("EMGDS_SMO_BACKEND", "").strip().lower()
try:
    from . import _smo as _smo_ext
except ImportError:
    _smo_ext = None

if _FORCED == "python":
    _smo_ext = None
elif _FORCED == "cython" and _smo_ext is None:
    raise ImportError("EMGDS_SMO_BACKEND=cython but the emgds._smo extension is not built")

SMO_BACKEND = "cython" if _smo_ext is not None else "python"

_SV_THRESHOLD = 1e-12
DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
DEFAULT_MAX_PASSES = 200

AUTO = "auto"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters; gamma may stay "auto" until fit time."""

    kind: str = "rbf"  # linear | rbf | poly
    gamma: float | str = AUTO
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf", "poly"):
            raise errors.InvalidConfig(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.gamma != AUTO and not float(self.gamma) > 0:
                raise errors.InvalidConfig("rbf gamma must be positive or 'auto'")
        if self.kind == "poly" and self.degree < 1:
            raise errors.InvalidConfig("polynomial degree must be >= 1")

    def resolved(self, x: np.ndarray) -> "KernelSpec":
        """Resolve auto gamma to 1 / (dim * mean feature variance) of x."""
        if self.kind != "rbf" or self.gamma != AUTO:
            return self
        mean_var = float(np.mean(np.var(x, axis=0)))
        if mean_var <= 0.0:
            return replace(self, gamma=1.0)
        return replace(self, gamma=1.0 / (x.shape[1] * mean_var))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma, "degree": self.degree,
                "coef0": self.coef0}

    @classmethod
    def from_dict(cls, doc: dict) -> "KernelSpec":
        try:
            return cls(kind=doc["kind"], gamma=doc["gamma"], degree=int(doc["degree"]),
                       coef0=float(doc["coef0"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise errors.SchemaError(f"bad kernel spec: {exc}") from exc


def kernel_eval(spec: KernelSpec, u, v) -> float:
    """Scalar kernel value K(u, v)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise errors.DimensionMismatch(f"kernel_eval: {u.shape} vs {v.shape}")
    if spec.kind == "linear":
        return float(u @ v)
    if spec.kind == "poly":
        return float((u @ v + spec.coef0) ** spec.degree)
    d = u - v
    return float(np.exp(-float(spec.gamma) * (d @ d)))


def gram(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Kernel matrix K[i, j] = K(x_i, z_j), vectorized."""
    if x.shape[1] != z.shape[1]:
        raise errors.DimensionMismatch(f"gram: {x.shape[1]} vs {z.shape[1]} columns")
    if spec.kind == "linear":
        return x @ z.T
    if spec.kind == "poly":
        return (x @ z.T + spec.coef0) ** spec.degree
    x2 = np.sum(x * x, axis=1)[:, None]
    z2 = np.sum(z * z, axis=1)[None, :]
    d2 = np.maximum(x2 + z2 - 2.0 * (x @ z.T), 0.0)
    return np.exp(-float(spec.gamma) * d2)


@dataclass(frozen=True, eq=False)
class SvmModel:
    """Binary decision function: sum_i dual_i K(sv_i, v) + bias, >= 0 is positive."""

    support_vectors: np.ndarray  # m x l
    dual_coeffs: np.ndarray      # m, equal to alpha_i * y_i
    bias: float
    kernel: KernelSpec
    c: float
    labels: tuple[str, str]      # (negative, positive)

    def __post_init__(self):
        sv = np.ascontiguousarray(self.support_vectors, dtype=np.float64)
        dc = np.ascontiguousarray(self.dual_coeffs, dtype=np.float64)
        if sv.ndim != 2 or dc.ndim != 1 or sv.shape[0] != dc.shape[0]:
            raise errors.DimensionMismatch("support vectors and dual coefficients disagree")
        if sv.shape[0] < 1:
            raise errors.EmgdsError("model must keep at least one support vector")
        for name, arr in (("support_vectors", sv), ("dual_coeffs", dc)):
            arr = arr.copy() if arr is getattr(self, name) else arr
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_support(self) -> int:
        return self.support_vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.support_vectors.shape[1]

    def to_dict(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coeffs": self.dual_coeffs.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.to_dict(),
            "c": self.c,
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SvmModel":
        try:
            return cls(
                support_vectors=np.asarray(doc["support_vectors"], dtype=np.float64),
                dual_coeffs=np.asarray(doc["dual_coeffs"], dtype=np.float64),
                bias=float(doc["bias"]),
                kernel=KernelSpec.from_dict(doc["kernel"]),
                c=float(doc["c"]),
                labels=(str(doc["labels"][0]), str(doc["labels"][1])),
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise errors.SchemaError(f"bad SVM model document: {exc}") from exc


def _run_smo(K, y, c, tol, max_passes, seed, record_objective):
    if record_objective or _smo_ext is None:
        return _smo_py.optimize(K, y, c, tol, max_passes, seed, record_objective)
    alpha, b, passes = _smo_ext.optimize(K, y, c, tol, max_passes, seed)
    return alpha, b, passes, None


def train_binary(inputs, labels, kernel: KernelSpec = KernelSpec(),
                 c: float = DEFAULT_C, tol: float = DEFAULT_TOL,
                 max_passes: int = DEFAULT_MAX_PASSES, seed: int = 0,
                 label_names: tuple[str, str] = ("-1", "+1"),
                 record_objective: bool = False):
    """Train a binary soft-margin SVM; labels are +-1.

    Returns the SvmModel, or (SvmModel, objective_trace) when
    ``record_objective`` is set (the trace always comes from the pure-Python
    kernel; both backends are bit-identical so it is representative).
    """
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise errors.DimensionMismatch(f"inputs {x.shape} vs labels {y.shape}")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise errors.NonFiniteInput("training data contains NaN or infinity")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise errors.InvalidConfig("binary labels must be +-1")
    if len(np.unique(y)) < 2:
        raise errors.InsufficientClasses("both labels must be present")
    if not c > 0:
        raise errors.InvalidConfig("c must be positive")
    if max_passes < 1:
        raise errors.InvalidConfig("max_passes must be >= 1")
    spec = kernel.resolved(x)
    K = gram(spec, x, x)
    alpha, working_b, _passes, trace = _run_smo(K, y, c, tol, max_passes, seed,
                                                record_objective)

    sv_mask = alpha > _SV_THRESHOLD
    if not sv_mask.any():
        raise errors.EmgdsError("SMO made no progress; training data is degenerate")
    # exact comparisons: clipping lands bound alphas exactly on 0 or c
    margin = (alpha > 0.0) & (alpha < c)
    f_no_bias = K @ (alpha * y)
    basis = margin if margin.any() else sv_mask
    bias = float(np.mean(y[basis] - f_no_bias[basis]))
    model = SvmModel(
        support_vectors=x[sv_mask],
        dual_coeffs=(alpha * y)[sv_mask],
        bias=bias,
        kernel=spec,
        c=float(c),
        labels=label_names,
    )
    return (model, trace) if record_objective else model


def decision(model: SvmModel, v) -> float:
    """Signed distance surrogate; >= 0 classifies as the positive label."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or len(v) != model.dim:
        raise errors.DimensionMismatch(
            f"decision: expected length {model.dim}, got {v.shape}"
        )
    k = gram(model.kernel, model.support_vectors, v[None, :])[:, 0]
    return float(model.dual_coeffs @ k + model.bias)


def decision_many(model: SvmModel, x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise errors.DimensionMismatch(f"decision_many: bad shape {x.shape}")
    return gram(model.kernel, x, model.support_vectors) @ model.dual_coeffs + model.bias


def predict_binary(model: SvmModel, v) -> str:
    return model.labels[1] if decision(model, v) >= 0.0 else model.labels[0]


def kkt_stats(model: SvmModel) -> dict:
    """Feasibility numbers for the dual solution recovered from the model."""
    alpha = np.abs(model.dual_coeffs)
    return {
        "alpha_min": float(alpha.min()),
        "alpha_max": float(alpha.max()),
        "c": model.c,
        "sum_alpha_y": float(model.dual_coeffs.sum()),
    }


@dataclass(frozen=True, eq=False)
class MulticlassSvmModel:
    """One-vs-rest ensemble: one binary model per class, argmax of decisions."""

    models: tuple[SvmModel, ...]
    class_order: tuple[str, ...]

    def __post_init__(self):
        if len(self.models) != len(self.class_order) or len(self.models) < 2:
            raise errors.InsufficientClasses("need one binary model per class, >= 2 classes")
        object.__setattr__(self, "models", tuple(self.models))
        object.__setattr__(self, "class_order", tuple(str(c) for c in self.class_order))

    @property
    def dim(self) -> int:
        return self.models[0].dim

    def to_dict(self) -> dict:
        return {"class_order": list(self.class_order),
                "models": [m.to_dict() for m in self.models]}

    @classmethod
    def from_dict(cls, doc: dict) -> "MulticlassSvmModel":
        try:
            return cls(
                models=tuple(SvmModel.from_dict(m) for m in doc["models"]),
                class_order=tuple(doc["class_order"]),
            )
        except (KeyError, TypeError) as exc:
            raise errors.SchemaError(f"bad multiclass model document: {exc}") from exc


def train_multiclass(inputs, labels, class_order=None,
                     kernel: KernelSpec = KernelSpec(), c: float = DEFAULT_C,
                     tol: float = DEFAULT_TOL, max_passes: int = DEFAULT_MAX_PASSES,
                     seed: int = 0) -> MulticlassSvmModel:
    """Train class-vs-rest binary models in a fixed class order.

    Per-class seeds derive deterministically from the master seed, so the
    sub-trainings are order-independent and could run concurrently.
    """
    x = np.ascontiguousarray(inputs, dtype=np.float64)
    labels = [str(l) for l in labels]
    if x.shape[0] != len(labels):
        raise errors.DimensionMismatch("one label per input row")
    if class_order is None:
        seen = dict.fromkeys(labels)
        class_order = tuple(seen)
    else:
        class_order = tuple(str(c) for c in class_order)
        stray = sorted(set(labels) - set(class_order))
        if stray:
            raise errors.InvalidConfig(f"labels outside class order: {stray}")
    present = set(labels)
    if len(present) < 2:
        raise errors.InsufficientClasses("need at least 2 distinct classes")
    missing = [cls for cls in class_order if cls not in present]
    if missing:
        raise errors.InsufficientClasses(f"classes without examples: {missing}")
    y_arr = np.array(labels)
    models = []
    for cls in class_order:
        y = np.where(y_arr == cls, 1.0, -1.0)
        models.append(
            train_binary(x, y, kernel=kernel, c=c, tol=tol, max_passes=max_passes,
                         seed=derive_seed(seed, "ovr", cls),
                         label_names=(f"not:{cls}", cls))
        )
    return MulticlassSvmModel(tuple(models), class_order)


def decision_values(model: MulticlassSvmModel, v) -> np.ndarray:
    return np.array([decision(m, v) for m in model.models])


def predict_multiclass(model: MulticlassSvmModel, v) -> str:
    """Argmax of per-class decisions; ties go to the earliest class in order."""
    values = decision_values(model, v)
    best = 0
    for k in range(1, len(values)):
        if values[k] > values[best]:
            best = k
    return model.class_order[best]


def predict_multiclass_many(model: MulticlassSvmModel, x: np.ndarray) -> list[str]:
    scores = np.column_stack([decision_many(m, x) for m in model.models])
    idx = np.argmax(scores, axis=1)  # argmax takes the first (earliest) maximum
    return [model.class_order[i] for i in idx]
