"""Standardizing PCA with a deterministic cyclic-Jacobi eigensolver.

Feature columns are z-scored before the covariance eigendecomposition: raw
magnitudes differ by orders of magnitude across families (waveform length vs
AR coefficients), and without scaling the loud families own every component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import errors

_EIGENVALUE_CLAMP = -1e-10
_JACOBI_REL_TOL = 1e-12
_MAX_SWEEPS = 100


@dataclass(frozen=True)
class VarianceFraction:
    fraction: float

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise errors.InvalidConfig("variance fraction must lie in (0, 1]")


@dataclass(frozen=True)
class ComponentCount:
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise errors.InvalidConfig("component count must be >= 1")


Retention = VarianceFraction | ComponentCount


def jacobi_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm drops below 1e-12 * trace.
    Returns (eigenvalues, eigenvectors) with eigenvectors in columns, in the
    raw (unsorted) order the rotations leave behind.
    """
    a = np.array(a, dtype=np.float64)
    d = a.shape[0]
    if a.shape != (d, d):
        raise errors.DimensionMismatch(f"expected square matrix, got {a.shape}")
    v = np.eye(d)
    if d == 1:
        return np.array([a[0, 0]]), v
    threshold = _JACOBI_REL_TOL * abs(float(np.trace(a)))

    def off_norm(m):
        o = m - np.diag(np.diag(m))
        return math.sqrt(float(np.sum(o * o)))

    for _ in range(_MAX_SWEEPS):
        if off_norm(a) <= threshold:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Z-scoring + orthonormal projection fitted on training vectors."""

    mean: np.ndarray
    scale: np.ndarray
    components: np.ndarray   # l x d, rows orthonormal
    eigenvalues: np.ndarray  # length l, non-increasing
    total_variance: float

    def __post_init__(self):
        for name in ("mean", "scale", "components", "eigenvalues"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr = arr.copy() if arr is getattr(self, name) else arr
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        l, d = self.components.shape
        if not 1 <= l <= d:
            raise errors.DimensionMismatch(f"need 1 <= l <= d, got l={l}, d={d}")
        if self.mean.shape != (d,) or self.scale.shape != (d,):
            raise errors.DimensionMismatch("mean/scale length must equal d")
        if self.eigenvalues.shape != (l,):
            raise errors.DimensionMismatch("one eigenvalue per retained component")

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "total_variance": self.total_variance,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PcaModel":
        try:
            return cls(
                mean=np.asarray(doc["mean"], dtype=np.float64),
                scale=np.asarray(doc["scale"], dtype=np.float64),
                components=np.asarray(doc["components"], dtype=np.float64),
                eigenvalues=np.asarray(doc["eigenvalues"], dtype=np.float64),
                total_variance=float(doc["total_variance"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise errors.SchemaError(f"bad PCA model document: {exc}") from exc


def _as_matrix(vectors) -> np.ndarray:
    rows = [np.asarray(getattr(v, "values", v), dtype=np.float64) for v in vectors]
    if len(rows) < 2:
        raise errors.TooFewSamples("fit_pca needs at least 2 vectors")
    d = len(rows[0])
    for r in rows:
        if r.ndim != 1 or len(r) != d:
            raise errors.DimensionMismatch("vectors have unequal dimension")
    return np.vstack(rows)


def fit_pca(vectors, retain: Retention = VarianceFraction(0.95)) -> PcaModel:
    """Fit mean/scale and the top eigenvectors of the standardized covariance.

    Zero-variance features get scale 1 (they contribute a constant 0 after
    centering) so degenerate corpora still train. Component signs follow a
    fixed convention: the largest-magnitude entry of each row is positive.
    """
    x = _as_matrix(vectors)
    n, d = x.shape
    mean = x.mean(axis=0)
    scale = x.std(axis=0, ddof=1)
    scale = np.where(scale == 0.0, 1.0, scale)
    z = (x - mean) / scale
    cov = z.T @ z / (n - 1)
    eigvals, eigvecs = jacobi_eigh(cov)
    order = np.argsort(-eigvals, kind="stable")
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    if np.any(eigvals < _EIGENVALUE_CLAMP):
        raise errors.EmgdsError(
            f"covariance eigenvalue {eigvals.min():.3e} below clamp tolerance"
        )
    eigvals = np.maximum(eigvals, 0.0)
    total = float(eigvals.sum())

    if isinstance(retain, ComponentCount):
        if retain.count > d:
            raise errors.DimensionMismatch(f"cannot retain {retain.count} of {d} components")
        l = retain.count
    else:
        if total <= 0.0:
            l = 1
        else:
            cum = np.cumsum(eigvals) / total
            l = int(np.searchsorted(cum, retain.fraction - 1e-12) + 1)
            l = min(l, d)

    components = eigvecs[:, :l].T.copy()
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0.0:
            row *= -1.0
    return PcaModel(mean, scale, components, eigvals[:l], total)


def _check_dim(v, expected: int, what: str) -> np.ndarray:
    v = np.asarray(getattr(v, "values", v), dtype=np.float64)
    if v.ndim != 1 or len(v) != expected:
        raise errors.DimensionMismatch(f"{what}: expected length {expected}, got {v.shape}")
    return v


def project(model: PcaModel, v) -> np.ndarray:
    """Map a d-vector to the l-dimensional principal subspace."""
    v = _check_dim(v, model.dim, "project")
    return model.components @ ((v - model.mean) / model.scale)


def project_many(model: PcaModel, vectors) -> np.ndarray:
    x = np.vstack([np.asarray(getattr(v, "values", v), dtype=np.float64) for v in vectors])
    if x.shape[1] != model.dim:
        raise errors.DimensionMismatch(
            f"project: expected dimension {model.dim}, got {x.shape[1]}"
        )
    return ((x - model.mean) / model.scale) @ model.components.T


def reconstruct(model: PcaModel, reduced) -> np.ndarray:
    """Inverse map back to the original feature space (lossy when l < d)."""
    r = _check_dim(reduced, model.n_components, "reconstruct")
    return model.mean + model.scale * (model.components.T @ r)
