"""Piecewise-constant density model on a binary tree of axis-aligned boxes.

A trained tree assigns to every point inside its root box the density
``count / (n_tot * volume)`` of the unique leaf containing it, and 0
outside.  Trees and nodes are immutable after construction and safe for
concurrent reads; every operation here is a pure function of its inputs.

Leaf intervals are half-open, ``[lo, hi)``, except that the upper root
boundary is closed, so a point lying exactly on a split plane always
belongs to the right sibling and points on the outer shell still belong
to the tree.
"""

from __future__ import annotations

import json
import sys
from contextlib import contextmanager
from typing import Iterator, Sequence

import numpy as np

from .datatable import DataTable
from .errors import (
    ConfigError,
    ModelInvariantError,
    ModelParseError,
    ModelSchemaError,
)

MODEL_FORMAT = "detree-v1"

# Root boxes default to the data bounding box padded by 0.1% of each
# dimension's range on both sides, so boundary entries are strictly
# interior and no box ever has zero width.
BOX_PADDING = 1e-3


class Box:
    """Axis-aligned box with strictly positive width in every dimension."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=np.float64).reshape(-1).copy()
        hi = np.asarray(hi, dtype=np.float64).reshape(-1).copy()
        if lo.shape != hi.shape or lo.size < 1:
            raise ConfigError(f"box bounds disagree: lo={lo}, hi={hi}")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise ConfigError("box bounds must be finite")
        if not (lo < hi).all():
            raise ConfigError(f"box must have positive width: lo={lo}, hi={hi}")
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lo = lo
        self.hi = hi

    @property
    def ndim(self) -> int:
        return self.lo.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def width(self, dim: int) -> float:
        return float(self.hi[dim] - self.lo[dim])

    def contains(self, x: np.ndarray) -> bool:
        """Closed containment test, used for the root box only."""
        return bool((x >= self.lo).all() and (x <= self.hi).all())

    def split(self, dim: int, value: float) -> tuple["Box", "Box"]:
        if not (self.lo[dim] < value < self.hi[dim]):
            raise ConfigError(
                f"split at {value} outside box interval "
                f"[{self.lo[dim]}, {self.hi[dim]}] in dim {dim}"
            )
        left_hi = self.hi.copy()
        left_hi[dim] = value
        right_lo = self.lo.copy()
        right_lo[dim] = value
        return Box(self.lo, left_hi), Box(right_lo, self.hi)

    def __eq__(self, other):
        return (
            isinstance(other, Box)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    def __repr__(self) -> str:
        return f"Box(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def bounding_box(data: DataTable, padding: float = BOX_PADDING) -> Box:
    """Padded bounding box of a sample (see ``BOX_PADDING``)."""
    lo = data.data.min(axis=0)
    hi = data.data.max(axis=0)
    span = hi - lo
    # degenerate dimensions (all values equal) still need positive width
    pad = np.where(span > 0, padding * span, 1e-3 * np.maximum(np.abs(lo), 1.0))
    return Box(lo - pad, hi + pad)


class TreeNode:
    """One node of a density tree; a leaf when ``left`` is None."""

    __slots__ = (
        "box",
        "count",
        "split_dim",
        "split_value",
        "left",
        "right",
        "node_id",
        "depth",
    )

    def __init__(self, box: Box, count: int):
        self.box = box
        self.count = int(count)
        self.split_dim = -1
        self.split_value = 0.0
        self.left: TreeNode | None = None
        self.right: TreeNode | None = None
        self.node_id = -1
        self.depth = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    def density(self, n_tot: int) -> float:
        return self.count / (n_tot * self.box.volume)

    def __repr__(self) -> str:
        kind = "leaf" if self.is_leaf else f"split d{self.split_dim}@{self.split_value}"
        return f"TreeNode(id={self.node_id}, count={self.count}, {kind})"


def _assign_ids(root: TreeNode) -> None:
    """Number nodes in preorder and record depths; determines all later
    tie-breaks, so both growth and deserialization must call it."""
    stack = [(root, 0)]
    next_id = 0
    while stack:
        node, depth = stack.pop()
        node.node_id = next_id
        node.depth = depth
        next_id += 1
        if not node.is_leaf:
            stack.append((node.right, depth + 1))
            stack.append((node.left, depth + 1))


class DensityTree:
    """A trained density estimation tree.

    Attributes
    ----------
    root : TreeNode
        Root of the box hierarchy; its box is the model support.
    columns : tuple of str
        Names of the modelled variables, in axis order.
    n_tot : int
        Size of the training sample; leaf counts sum to it.
    meta : dict
        In-memory provenance (stop parameters, pruning alpha).  Not part
        of the serialized model.
    """

    def __init__(self, root: TreeNode, columns: Sequence[str], n_tot: int, meta=None):
        self.root = root
        self.columns = tuple(columns)
        self.n_tot = int(n_tot)
        self.meta = dict(meta) if meta else {}
        _assign_ids(root)
        self._flat = None
        self._leaf_arrays = None
        self._node_list = None
        self._parent_ids = None

    @property
    def box(self) -> Box:
        return self.root.box

    @property
    def ndim(self) -> int:
        return self.root.box.ndim

    def nodes(self) -> Iterator[TreeNode]:
        """All nodes in preorder (node_id order)."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def leaves(self) -> Iterator[TreeNode]:
        for node in self.nodes():
            if node.is_leaf:
                yield node

    @property
    def n_leaves(self) -> int:
        return sum(1 for _ in self.leaves())

    @property
    def n_nodes(self) -> int:
        return len(self.node_list())

    def node_list(self) -> list[TreeNode]:
        """Nodes as a list indexed by node_id (preorder), cached."""
        if self._node_list is None:
            self._node_list = list(self.nodes())
        return self._node_list

    def parent_ids(self) -> list[int]:
        """parent_ids[i] is the id of node i's parent; -1 for the root."""
        if self._parent_ids is None:
            parents = [-1] * len(self.node_list())
            for node in self.node_list():
                if not node.is_leaf:
                    parents[node.left.node_id] = node.node_id
                    parents[node.right.node_id] = node.node_id
            self._parent_ids = parents
        return self._parent_ids

    def _check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.ndim:
            raise ConfigError(
                f"point has dimension {x.size}, model has {self.ndim}"
            )
        return x

    def locate(self, x) -> TreeNode | None:
        """The unique leaf containing x, or None outside the root box."""
        x = self._check_point(x)
        if not self.root.box.contains(x):
            return None
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.split_dim] < node.split_value else node.right
        return node

    def evaluate(self, x) -> float:
        """Density at x: count/(n_tot*volume) of its leaf, 0 outside."""
        leaf = self.locate(x)
        if leaf is None:
            return 0.0
        return leaf.density(self.n_tot)

    def _ensure_flat(self):
        """Structure-of-arrays mirror of the tree for vectorized descent."""
        if self._flat is not None:
            return self._flat
        n = self.n_nodes
        split_dim = np.full(n, -1, dtype=np.int64)
        split_value = np.zeros(n, dtype=np.float64)
        left = np.zeros(n, dtype=np.int64)
        right = np.zeros(n, dtype=np.int64)
        dens = np.zeros(n, dtype=np.float64)
        for node in self.nodes():
            i = node.node_id
            if node.is_leaf:
                dens[i] = node.density(self.n_tot)
            else:
                split_dim[i] = node.split_dim
                split_value[i] = node.split_value
                left[i] = node.left.node_id
                right[i] = node.right.node_id
        self._flat = (split_dim, split_value, left, right, dens)
        return self._flat

    def evaluate_many(self, X) -> np.ndarray:
        """Densities for an (n, d) batch of points."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if self.ndim == 1 else X.reshape(1, -1)
        if X.shape[1] != self.ndim:
            raise ConfigError(
                f"points have dimension {X.shape[1]}, model has {self.ndim}"
            )
        split_dim, split_value, left, right, dens = self._ensure_flat()
        inside = np.logical_and(
            (X >= self.root.box.lo).all(axis=1),
            (X <= self.root.box.hi).all(axis=1),
        )
        cur = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.flatnonzero(inside)
        while rows.size:
            node_ids = cur[rows]
            dims = split_dim[node_ids]
            active = dims >= 0
            rows = rows[active]
            if not rows.size:
                break
            node_ids = node_ids[active]
            dims = dims[active]
            go_left = X[rows, dims] < split_value[node_ids]
            cur[rows] = np.where(go_left, left[node_ids], right[node_ids])
        out = np.zeros(X.shape[0], dtype=np.float64)
        out[inside] = dens[cur[inside]]
        return out

    def __call__(self, X) -> np.ndarray:
        return self.evaluate_many(X)

    def leaf_arrays(self):
        """(lo, hi, counts, nodes) over leaves, cached; lo/hi are (L, d)."""
        if self._leaf_arrays is None:
            nodes = list(self.leaves())
            lo = np.array([n.box.lo for n in nodes])
            hi = np.array([n.box.hi for n in nodes])
            counts = np.array([n.count for n in nodes], dtype=np.float64)
            lo.setflags(write=False)
            hi.setflags(write=False)
            counts.setflags(write=False)
            self._leaf_arrays = (lo, hi, counts, nodes)
        return self._leaf_arrays

    def integral(self) -> float:
        """Exact integral of the estimator over the root box."""
        lo, hi, counts, _ = self.leaf_arrays()
        vols = np.prod(hi - lo, axis=1)
        return float(np.sum(counts / (self.n_tot * vols) * vols))

    @property
    def density_floor(self) -> float:
        """One notional entry spread over the root box; the positive
        lower bound used when this model enters a log ratio."""
        return 1.0 / (self.n_tot * self.root.box.volume)

    # -- serialization ---------------------------------------------------

    def to_doc(self) -> dict:
        """Nested-dict form of the model (the JSON document)."""
        root_doc = _node_to_doc(self.root)
        return {
            "format": MODEL_FORMAT,
            "columns": list(self.columns),
            "n_tot": self.n_tot,
            "box": {"lo": self.root.box.lo.tolist(), "hi": self.root.box.hi.tolist()},
            "root": root_doc,
        }

    def to_json(self) -> str:
        with _deep_recursion():
            return json.dumps(self.to_doc(), allow_nan=False) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @classmethod
    def from_doc(cls, doc: dict) -> "DensityTree":
        if not isinstance(doc, dict):
            raise ModelParseError("model document is not a JSON object")
        fmt = doc.get("format")
        if fmt != MODEL_FORMAT:
            raise ModelSchemaError(
                f"unsupported model format {fmt!r}, expected {MODEL_FORMAT!r}"
            )
        try:
            columns = [str(c) for c in doc["columns"]]
            n_tot = int(doc["n_tot"])
            box = Box(doc["box"]["lo"], doc["box"]["hi"])
            root_doc = doc["root"]
        except (KeyError, TypeError, ValueError, ConfigError) as exc:
            raise ModelParseError(f"bad model document: {exc}") from exc
        if len(columns) != box.ndim:
            raise ModelInvariantError(
                f"{len(columns)} columns for a {box.ndim}-dimensional box"
            )
        if n_tot < 1:
            raise ModelInvariantError(f"n_tot must be >= 1, got {n_tot}")
        root = _node_from_doc(root_doc, box)
        if root.count != n_tot:
            raise ModelInvariantError(
                f"leaf counts sum to {root.count}, n_tot is {n_tot}"
            )
        return cls(root, columns, n_tot)

    @classmethod
    def from_json(cls, text: str) -> "DensityTree":
        try:
            with _deep_recursion():
                doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelParseError(f"model file is not valid JSON: {exc}") from exc
        return cls.from_doc(doc)

    @classmethod
    def load(cls, path) -> "DensityTree":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def __repr__(self) -> str:
        return (
            f"DensityTree(columns={list(self.columns)}, n_tot={self.n_tot}, "
            f"n_leaves={self.n_leaves})"
        )


@contextmanager
def _deep_recursion(limit: int = 20000):
    # json's C encoder/scanner recurse per nesting level; deep trees need room
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, limit))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def _node_to_doc(root: TreeNode) -> dict:
    root_doc: dict = {}
    stack = [(root, root_doc)]
    while stack:
        node, doc = stack.pop()
        doc["count"] = node.count
        if node.is_leaf:
            doc["leaf"] = True
        else:
            doc["split_dim"] = int(node.split_dim)
            doc["split_value"] = float(node.split_value)
            left_doc: dict = {}
            right_doc: dict = {}
            doc["left"] = left_doc
            doc["right"] = right_doc
            stack.append((node.right, right_doc))
            stack.append((node.left, left_doc))
    return root_doc


class _Fixup:
    """Stack marker that attaches parsed children and checks count sums."""

    __slots__ = ("node", "children")

    def __init__(self, node, children):
        self.node = node
        self.children = children


def _node_from_doc(doc, box: Box) -> TreeNode:
    root_holder: list[TreeNode | None] = [None]
    stack: list = [(doc, box, root_holder, 0)]
    while stack:
        item = stack.pop()
        if isinstance(item, _Fixup):
            node = item.node
            node.left, node.right = item.children
            if node.left.count + node.right.count != node.count:
                raise ModelInvariantError(
                    f"children counts {node.left.count}+{node.right.count} "
                    f"!= parent count {node.count}"
                )
            continue
        d, b, holder, slot = item
        if not isinstance(d, dict) or "count" not in d:
            raise ModelParseError("node document missing 'count'")
        try:
            count = int(d["count"])
        except (TypeError, ValueError) as exc:
            raise ModelParseError(f"bad node count: {d.get('count')!r}") from exc
        if count < 0:
            raise ModelInvariantError(f"negative node count {count}")
        node = TreeNode(b, count)
        holder[slot] = node
        if d.get("leaf"):
            continue
        try:
            dim = int(d["split_dim"])
            value = float(d["split_value"])
            left_doc = d["left"]
            right_doc = d["right"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelParseError(f"bad internal node: {exc}") from exc
        if not 0 <= dim < b.ndim:
            raise ModelInvariantError(f"split_dim {dim} outside 0..{b.ndim - 1}")
        if not (b.lo[dim] < value < b.hi[dim]):
            raise ModelInvariantError(
                f"split at {value} outside box interval "
                f"[{b.lo[dim]}, {b.hi[dim]}] in dim {dim}"
            )
        left_box, right_box = b.split(dim, value)
        node.split_dim = dim
        node.split_value = value
        children: list = [None, None]
        stack.append(_Fixup(node, children))
        stack.append((right_doc, right_box, children, 1))
        stack.append((left_doc, left_box, children, 0))
    return root_holder[0]
