"""Weakest-link pruning under leaf-count or node-depth complexity.

Every internal node has a regularization threshold: the smallest alpha
at which collapsing it (given already-pruned descendants) no longer
worsens the regularized error.  Collapsing all nodes whose threshold is
attained (``<= alpha``) yields the pruned tree for that alpha, and the
ordered thresholds form the pruning profile.

Thresholds are computed bottom-up on piecewise-linear cost functions,
which yields the exact solution path of ``sum_leaves R + alpha * C``:
a node's recorded threshold accounts for its descendants collapsing
first, so a parent whose collapse subsumes a marginal child is recorded
at the combined break point rather than at a transiently lower value.
Profiles are therefore always monotone and match exhaustive subtree
enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

import numpy as np

from .errors import ConfigError
from .tree import DensityTree, TreeNode
from .growth import replacement_error


class Complexity(str, Enum):
    """Complexity function: number of terminal leaves, or 1 + node depth."""

    LEAF_COUNT = "leaves"
    NODE_DEPTH = "depth"


def _as_complexity(kind) -> Complexity:
    if isinstance(kind, Complexity):
        return kind
    try:
        return Complexity(kind)
    except ValueError:
        raise ConfigError(
            f"unknown complexity kind {kind!r}; use 'leaves' or 'depth'"
        ) from None


def _leaves_under(node: TreeNode) -> list[TreeNode]:
    out = []
    stack = [node]
    while stack:
        n = stack.pop()
        if n.is_leaf:
            out.append(n)
        else:
            stack.append(n.right)
            stack.append(n.left)
    return out


def complexity(node: TreeNode, kind) -> int:
    """C(node): terminal-leaf count, or 1 + depth (root depth 0)."""
    kind = _as_complexity(kind)
    if kind is Complexity.LEAF_COUNT:
        return len(_leaves_under(node))
    return 1 + node.depth


def node_error(node: TreeNode, n_tot: int) -> float:
    """Replacement error of the node taken as a single leaf."""
    return replacement_error(node.count, node.box.volume, n_tot)


def alpha_threshold(tree: DensityTree, node: TreeNode, kind) -> float:
    """(R(node) - sum of leaf errors under node) / C(node).

    This is the static per-node value on the tree as it stands; the
    profile uses the path-corrected thresholds instead.
    """
    if node.is_leaf:
        raise ConfigError("alpha_threshold is undefined for a leaf")
    kind = _as_complexity(kind)
    leaf_sum = sum(node_error(l, tree.n_tot) for l in _leaves_under(node))
    return (node_error(node, tree.n_tot) - leaf_sum) / complexity(node, kind)


@dataclass(frozen=True)
class PruneStep:
    threshold: float
    node_id: int
    n_leaves_after: int


@dataclass(frozen=True)
class PruneProfile:
    """Ordered collapse schedule for one tree under one complexity kind.

    ``steps`` are sorted by threshold (non-decreasing), deepest node
    first among equal thresholds; applying every step with threshold
    ``<= alpha`` produces the pruned tree for that alpha.
    """

    steps: tuple[PruneStep, ...]
    kind: Complexity
    tree: DensityTree
    n_leaves_full: int

    @property
    def thresholds(self) -> np.ndarray:
        return np.array([s.threshold for s in self.steps], dtype=np.float64)

    def alphas(self) -> np.ndarray:
        """Distinct thresholds, ascending."""
        return np.unique(self.thresholds)

    def __len__(self) -> int:
        return len(self.steps)


def _node_thresholds_leafcount(tree: DensityTree) -> dict[int, float]:
    """Own collapse threshold per internal node, leaf-count complexity.

    Bottom-up over piecewise-linear total costs ``cost(alpha) =
    sum_leaves R + alpha * n_leaves``; a node's threshold is where the
    collapsed line ``R(node) + alpha`` overtakes the best children cost.
    Nodes are visited in descending preorder id, so children come first.
    """
    nodes = tree.node_list()
    n_tot = tree.n_tot
    # segments[(node_id)] = list of (start_alpha, intercept, slope)
    segs: dict[int, list] = {}
    own: dict[int, float] = {}
    for node in reversed(nodes):
        r = node_error(node, n_tot)
        if node.is_leaf:
            segs[node.node_id] = [(0.0, r, 1.0)]
            continue
        f = _sum_linear(segs.pop(node.left.node_id), segs.pop(node.right.node_id))
        alpha = _cross_linear(f, r)
        own[node.node_id] = alpha
        best = [seg for seg in f if seg[0] < alpha]
        best.append((alpha, r, 1.0))
        segs[node.node_id] = best
    return own


def _sum_linear(a: list, b: list) -> list:
    out = []
    ia = ib = 0
    ca, sa = a[0][1], a[0][2]
    cb, sb = b[0][1], b[0][2]
    starts = sorted({seg[0] for seg in a} | {seg[0] for seg in b})
    for x in starts:
        while ia < len(a) and a[ia][0] <= x:
            ca, sa = a[ia][1], a[ia][2]
            ia += 1
        while ib < len(b) and b[ib][0] <= x:
            cb, sb = b[ib][1], b[ib][2]
            ib += 1
        out.append((x, ca + cb, sa + sb))
    return out


def _cross_linear(f: list, r_node: float) -> float:
    """First alpha where ``r_node + alpha`` meets the children cost f.

    f has slope >= 2 everywhere and starts below the line (splits were
    only accepted with positive gain), so the crossing is unique.
    """
    for i, (start, c, s) in enumerate(f):
        end = f[i + 1][0] if i + 1 < len(f) else math.inf
        alpha = (r_node - c) / (s - 1.0)
        if alpha < start:
            alpha = start  # fp guard: crossing at the segment boundary
        if alpha <= end or i + 1 == len(f):
            return max(alpha, 0.0)
    raise AssertionError("no crossing found in an unbounded last segment")


def _node_thresholds_depth(tree: DensityTree) -> dict[int, float]:
    """Own collapse threshold per internal node, node-depth complexity.

    Bottom-up over piecewise-constant leaf-error sums: a node with
    C = 1 + depth collapses at the first alpha where
    ``alpha * C >= R(node) - S(alpha)``, S being the summed errors of
    its (already pruned) leaves.
    """
    nodes = tree.node_list()
    n_tot = tree.n_tot
    segs: dict[int, list] = {}  # node_id -> list of (start_alpha, value)
    own: dict[int, float] = {}
    for node in reversed(nodes):
        r = node_error(node, n_tot)
        if node.is_leaf:
            segs[node.node_id] = [(0.0, r)]
            continue
        f = _sum_constant(segs.pop(node.left.node_id), segs.pop(node.right.node_id))
        c_node = 1 + node.depth
        alpha = None
        for i, (start, v) in enumerate(f):
            end = f[i + 1][0] if i + 1 < len(f) else math.inf
            required = (r - v) / c_node
            if required <= start:
                alpha = start
                break
            if required < end or i + 1 == len(f):
                alpha = required
                break
        alpha = max(alpha, 0.0)
        own[node.node_id] = alpha
        best = [seg for seg in f if seg[0] < alpha]
        best.append((alpha, r))
        segs[node.node_id] = best
    return own


def _sum_constant(a: list, b: list) -> list:
    out = []
    ia = ib = 0
    va = a[0][1]
    vb = b[0][1]
    starts = sorted({seg[0] for seg in a} | {seg[0] for seg in b})
    for x in starts:
        while ia < len(a) and a[ia][0] <= x:
            va = a[ia][1]
            ia += 1
        while ib < len(b) and b[ib][0] <= x:
            vb = b[ib][1]
            ib += 1
        out.append((x, va + vb))
    return out


def prune_sequence(tree: DensityTree, kind) -> PruneProfile:
    """Full collapse schedule of a tree; empty for a single-leaf tree."""
    kind = _as_complexity(kind)
    nodes = tree.node_list()
    n_leaves_full = sum(1 for n in nodes if n.is_leaf)
    if tree.root.is_leaf:
        return PruneProfile((), kind, tree, n_leaves_full)
    if kind is Complexity.LEAF_COUNT:
        own = _node_thresholds_leafcount(tree)
    else:
        own = _node_thresholds_depth(tree)
    # effective threshold: a node can never outlive a collapsing ancestor
    eff: dict[int, float] = {}
    for node in nodes:  # preorder: parents first
        if node.is_leaf:
            continue
        parent_eff = eff.get(_parent_id(tree, node), math.inf)
        eff[node.node_id] = min(own[node.node_id], parent_eff)
    order = sorted(
        eff.items(), key=lambda kv: (kv[1], -nodes[kv[0]].depth, kv[0])
    )
    steps = tuple(
        PruneStep(threshold, node_id, n_leaves_full - i - 1)
        for i, (node_id, threshold) in enumerate(order)
    )
    return PruneProfile(steps, kind, tree, n_leaves_full)


def _parent_id(tree: DensityTree, node: TreeNode) -> int:
    return tree.parent_ids()[node.node_id]


def apply_alpha(tree: DensityTree, profile: PruneProfile, alpha: float) -> DensityTree:
    """Tree with every profile step at threshold <= alpha applied.

    Equality collapses (ties go to the simpler tree).  alpha = 0 removes
    zero-threshold nodes only; alpha = inf yields the single-leaf tree.
    """
    if profile.tree is not tree:
        raise ConfigError("profile was built from a different tree")
    collapsed = {s.node_id for s in profile.steps if s.threshold <= alpha}
    new_root = _copy_pruned(tree.root, collapsed)
    meta = dict(tree.meta)
    meta["alpha"] = float(alpha)
    meta["complexity"] = profile.kind.value
    return DensityTree(new_root, tree.columns, tree.n_tot, meta=meta)


def _copy_pruned(root: TreeNode, collapsed: set) -> TreeNode:
    new_root = TreeNode(root.box, root.count)
    stack = [(root, new_root)]
    while stack:
        old, new = stack.pop()
        if old.is_leaf or old.node_id in collapsed:
            continue
        new.split_dim = old.split_dim
        new.split_value = old.split_value
        new.left = TreeNode(old.left.box, old.left.count)
        new.right = TreeNode(old.right.box, old.right.count)
        stack.append((old.right, new.right))
        stack.append((old.left, new.left))
    return new_root
