"""Between-class separation and dendrogram export.

Validates the power/precision grouping: pairwise Mahalanobis distances between
class means under the pooled within-class covariance, agglomerated into a
merge tree whose heights quantify dissimilarity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from . import errors

_REGULARIZER = 1e-8  # times trace(S)/l, added to the diagonal when needed

LINKAGE_METHODS = ("single", "complete", "average")


@dataclass(frozen=True, eq=False)
class ClassSeparation:
    """Per-class means and their pairwise Mahalanobis distances."""

    class_order: tuple[str, ...]
    means: np.ndarray             # K x l
    pooled_covariance: np.ndarray  # l x l
    distances: np.ndarray          # K x K, symmetric, zero diagonal

    def __post_init__(self):
        for name in ("means", "pooled_covariance", "distances"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr = arr.copy() if arr is getattr(self, name) else arr
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        k = len(self.class_order)
        if self.means.shape[0] != k or self.distances.shape != (k, k):
            raise errors.DimensionMismatch("class count mismatch in separation fields")


def class_separation(vectors, labels) -> ClassSeparation:
    """Mahalanobis distances between class means under pooled covariance.

    ``vectors`` is an (n, l) array (or sequence of l-vectors) and ``labels``
    names each row's class. Pooled covariance uses the N - K denominator; its
    inverse goes through a Cholesky factorization, retried once with a
    1e-8 * trace/l diagonal bump when the factorization fails.
    """
    x = np.asarray(
        [np.asarray(getattr(v, "values", v), dtype=np.float64) for v in vectors]
    )
    names = [getattr(l, "code", str(l)) for l in labels]
    if x.ndim != 2 or len(names) != x.shape[0]:
        raise errors.DimensionMismatch("one label per vector required")
    order = list(dict.fromkeys(names))
    if len(order) < 2:
        raise errors.TooFewSamples("need at least 2 classes")
    n, l = x.shape
    k = len(order)
    if n <= l + k:
        raise errors.TooFewSamples(
            f"need more than dim + classes = {l + k} samples, got {n}"
        )
    means = np.empty((k, l))
    scatter = np.zeros((l, l))
    names_arr = np.array(names)
    for ci, cls in enumerate(order):
        rows = x[names_arr == cls]
        if rows.shape[0] < 2:
            raise errors.TooFewSamples(f"class {cls} has {rows.shape[0]} vector(s); need >= 2")
        means[ci] = rows.mean(axis=0)
        centered = rows - means[ci]
        scatter += centered.T @ centered
    pooled = scatter / (n - k)
    pooled = 0.5 * (pooled + pooled.T)

    try:
        factor = cho_factor(pooled, lower=True)
    except LinAlgError:
        bumped = pooled + (_REGULARIZER * np.trace(pooled) / l) * np.eye(l)
        try:
            factor = cho_factor(bumped, lower=True)
        except LinAlgError as exc:
            raise errors.SingularCovariance(
                "pooled covariance not factorizable even after regularization"
            ) from exc

    dist = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            diff = means[i] - means[j]
            d2 = float(diff @ cho_solve(factor, diff))
            d = float(np.sqrt(max(d2, 0.0)))
            dist[i, j] = dist[j, i] = d
    return ClassSeparation(tuple(order), means, pooled, dist)


# ---------------------------------------------------------------------------
# Agglomerative clustering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DendrogramNode:
    """Either a leaf (``leaf`` set) or a merge of two subtrees at ``height``."""

    height: float = 0.0
    leaf: str | None = None
    left: "DendrogramNode | None" = None
    right: "DendrogramNode | None" = None

    def __post_init__(self):
        is_leaf = self.leaf is not None
        has_children = self.left is not None and self.right is not None
        if is_leaf == has_children:
            raise errors.InvalidConfig("node must be a leaf xor a merge")

    @property
    def is_leaf(self) -> bool:
        return self.leaf is not None

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.leaf]
        return self.left.leaves() + self.right.leaves()

    def merge_heights(self) -> list[float]:
        if self.is_leaf:
            return []
        return self.left.merge_heights() + self.right.merge_heights() + [self.height]


def linkage(separation, method: str = "single", names=None) -> DendrogramNode:
    """Agglomerate classes into a merge tree.

    ``separation`` is a ClassSeparation or a raw symmetric distance matrix
    (then ``names`` labels the leaves). Ties break toward the pair with the
    lowest (class-order) representative indices.
    """
    if isinstance(separation, ClassSeparation):
        dist = np.array(separation.distances, dtype=np.float64)
        names = list(separation.class_order)
    else:
        dist = np.array(separation, dtype=np.float64)
        if names is None:
            names = [f"c{i}" for i in range(dist.shape[0])]
    if method not in LINKAGE_METHODS:
        raise errors.InvalidConfig(f"unknown linkage method {method!r}")
    k = dist.shape[0]
    if dist.shape != (k, k) or k < 2 or len(names) != k:
        raise errors.DimensionMismatch("distance matrix and names disagree")

    d = dist.copy()
    nodes = [DendrogramNode(leaf=str(nm)) for nm in names]
    sizes = [1] * k
    index = list(range(k))  # active positions, kept sorted by representative

    while len(index) > 1:
        best = None
        best_pair = None
        for a in range(len(index) - 1):
            for bpos in range(a + 1, len(index)):
                val = d[index[a], index[bpos]]
                if best is None or val < best:
                    best = val
                    best_pair = (a, bpos)
        a, bpos = best_pair
        ia, ib = index[a], index[bpos]
        merged = DendrogramNode(height=float(best), left=nodes[ia], right=nodes[ib])
        # Lance-Williams update of the row kept at position ia
        for other in index:
            if other in (ia, ib):
                continue
            da, db = d[ia, other], d[ib, other]
            if method == "single":
                new = min(da, db)
            elif method == "complete":
                new = max(da, db)
            else:
                new = (sizes[ia] * da + sizes[ib] * db) / (sizes[ia] + sizes[ib])
            d[ia, other] = d[other, ia] = new
        nodes[ia] = merged
        sizes[ia] += sizes[ib]
        index.pop(bpos)
    return nodes[index[0]]


# ---------------------------------------------------------------------------
# Export formats
# ---------------------------------------------------------------------------

def _to_json_obj(node: DendrogramNode):
    if node.is_leaf:
        return {"leaf": node.leaf}
    return {
        "height": node.height,
        "left": _to_json_obj(node.left),
        "right": _to_json_obj(node.right),
    }


def _from_json_obj(obj) -> DendrogramNode:
    if not isinstance(obj, dict):
        raise errors.SchemaError("dendrogram node must be an object")
    if "leaf" in obj:
        return DendrogramNode(leaf=str(obj["leaf"]))
    try:
        return DendrogramNode(
            height=float(obj["height"]),
            left=_from_json_obj(obj["left"]),
            right=_from_json_obj(obj["right"]),
        )
    except KeyError as exc:
        raise errors.SchemaError(f"dendrogram node missing field {exc}") from exc


def _newick(node: DendrogramNode, parent_height: float) -> str:
    length = repr(parent_height - node.height) if not node.is_leaf else repr(parent_height)
    if node.is_leaf:
        return f"{node.leaf}:{length}"
    inner = f"({_newick(node.left, node.height)},{_newick(node.right, node.height)})"
    return f"{inner}:{length}"


def export_dendrogram(root: DendrogramNode, format: str = "json") -> str:
    """Serialize a merge tree as nested JSON, Graphviz dot, or Newick."""
    if format == "json":
        return json.dumps(_to_json_obj(root), indent=2, sort_keys=True) + "\n"
    if format == "dot":
        lines = ["graph dendrogram {"]
        counter = [0]

        def walk(node: DendrogramNode) -> str:
            nid = f"n{counter[0]}"
            counter[0] += 1
            if node.is_leaf:
                lines.append(f'  {nid} [label="{node.leaf}" shape=box];')
            else:
                lines.append(f'  {nid} [label="{node.height:.6f}"];')
                for child in (node.left, node.right):
                    cid = walk(child)
                    lines.append(f"  {nid} -- {cid};")
            return nid

        walk(root)
        lines.append("}")
        return "\n".join(lines) + "\n"
    if format == "newick":
        if root.is_leaf:
            return f"{root.leaf};\n"
        left = _newick(root.left, root.height)
        right = _newick(root.right, root.height)
        return f"({left},{right});\n"
    raise errors.InvalidConfig(f"unknown dendrogram format {format!r}")


def parse_dendrogram_json(text: str) -> DendrogramNode:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.SchemaError(f"dendrogram JSON invalid: {exc}") from exc
    return _from_json_obj(obj)
