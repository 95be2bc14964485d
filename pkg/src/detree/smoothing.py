"""Smooth evaluators on top of a trained tree.

Smearing convolves the piecewise-constant estimator with a normalized
product triangular resolution function; the convolution is exact, costs
O(n_leaves) per query independent of the sample size, and removes the
sharp leaf boundaries.  Linear interpolation (two dimensions only)
triangulates the leaf centers and reads the plane through the three
surrounding center densities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crossval import Bandwidths, _check_bandwidths, _overlap_block
from .errors import ConfigError, NumericError
from .tree import DensityTree

# Relative area below which a set of centers counts as collinear.
COLLINEAR_REL_AREA = 1e-12


class SmearedTree:
    """Exact convolution of a density tree with a triangular resolution."""

    def __init__(self, tree: DensityTree, bw: Bandwidths):
        self.tree = tree
        self.bw = bw
        self._h = _check_bandwidths(bw, tree.ndim)
        lo, hi, counts, _ = tree.leaf_arrays()
        self._lo = lo
        self._hi = hi
        vols = np.prod(hi - lo, axis=1)
        self._dens = counts / (tree.n_tot * vols)

    @property
    def ndim(self) -> int:
        return self.tree.ndim

    @property
    def density_floor(self) -> float:
        return self.tree.density_floor

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.size != self.ndim:
            raise ConfigError(f"point has dimension {x.size}, model has {self.ndim}")
        return float(self.evaluate_many(x.reshape(1, -1))[0])

    def evaluate_many(self, X, chunk: int = 256) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if self.ndim == 1 else X.reshape(1, -1)
        if X.shape[1] != self.ndim:
            raise ConfigError(
                f"points have dimension {X.shape[1]}, model has {self.ndim}"
            )
        h = self._h
        out = np.empty(X.shape[0])
        for start in range(0, X.shape[0], chunk):
            stop = min(start + chunk, X.shape[0])
            prod = None
            for k in range(self.ndim):
                ov = _overlap_block(
                    self._lo[:, k], self._hi[:, k], X[start:stop, k : k + 1], h[k]
                )
                ov /= h[k]
                prod = ov if prod is None else prod * ov
            out[start:stop] = prod @ self._dens
        return out

    def __call__(self, X) -> np.ndarray:
        return self.evaluate_many(X)


def smear_evaluate(model: SmearedTree, x) -> float:
    """Smeared density at one point (see SmearedTree)."""
    return model.evaluate(x)


# -- linear interpolation (d = 2) ------------------------------------------


@dataclass(frozen=True)
class Triangulation:
    """Delaunay triangulation of the leaf centers of a 2-D tree.

    ``vertices`` are the centers, ``values`` the corresponding leaf
    densities, ``triangles`` index triples into ``vertices``, oriented
    counter-clockwise.
    """

    vertices: np.ndarray
    values: np.ndarray
    triangles: np.ndarray
    tree: DensityTree


def _circumcircle(a, b, c):
    """Center and squared radius of the circle through three points."""
    d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]))
    a2 = a[0] * a[0] + a[1] * a[1]
    b2 = b[0] * b[0] + b[1] * b[1]
    c2 = c[0] * c[0] + c[1] * c[1]
    ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d
    uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d
    r2 = (a[0] - ux) ** 2 + (a[1] - uy) ** 2
    return ux, uy, r2


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _bowyer_watson(points: np.ndarray) -> list[tuple[int, int, int]]:
    """Incremental Delaunay triangulation of normalized 2-D points.

    Points are inserted one at a time into a super-triangle; triangles
    whose circumcircle strictly contains the new point are removed and
    the cavity re-fanned.  Points are expected roughly inside [0, 1]^2.
    """
    n = len(points)
    pts = np.vstack([points, [[-40.0, -40.0], [40.0, -40.0], [0.5, 60.0]]])
    tris: list[tuple[int, int, int]] = [(n, n + 1, n + 2)]
    circ: list[tuple[float, float, float]] = [
        _circumcircle(pts[n], pts[n + 1], pts[n + 2])
    ]
    for p_idx in range(n):
        px, py = pts[p_idx]
        centers = np.asarray(circ)
        bad = (
            (px - centers[:, 0]) ** 2 + (py - centers[:, 1]) ** 2
            < centers[:, 2] * (1.0 - 1e-12)
        )
        bad_idx = np.flatnonzero(bad)
        if bad_idx.size == 0:
            raise NumericError("point fell outside the triangulated region")
        # cavity boundary: directed edges of bad triangles whose reverse
        # is not itself an edge of a bad triangle
        edges: dict[tuple[int, int], int] = {}
        for ti in bad_idx:
            a, b, c = tris[ti]
            for e in ((a, b), (b, c), (c, a)):
                edges[e] = edges.get(e, 0) + 1
        boundary = [e for e in edges if (e[1], e[0]) not in edges]
        keep = [i for i in range(len(tris)) if not bad[i]]
        tris = [tris[i] for i in keep]
        circ = [circ[i] for i in keep]
        for a, b in boundary:
            if abs(_orient(pts[p_idx], pts[a], pts[b])) == 0.0:
                continue  # exactly collinear sliver; covered by neighbors
            tri = (p_idx, a, b)
            if _orient(pts[tri[0]], pts[tri[1]], pts[tri[2]]) < 0:
                tri = (p_idx, b, a)
            tris.append(tri)
            circ.append(_circumcircle(pts[tri[0]], pts[tri[1]], pts[tri[2]]))
    return [t for t in tris if max(t) < n]


def triangulate(tree: DensityTree) -> Triangulation:
    """Delaunay triangulation of the leaf centers, vertex values the
    leaf densities.  Two-dimensional trees only."""
    if tree.ndim != 2:
        raise ConfigError(
            f"interpolation supports 2 dimensions only, model has {tree.ndim}"
        )
    lo, hi, counts, _ = tree.leaf_arrays()
    centers = 0.5 * (lo + hi)
    if centers.shape[0] < 3:
        raise NumericError("need at least 3 leaf centers to triangulate")
    values = counts / (tree.n_tot * np.prod(hi - lo, axis=1))

    # collinearity check: largest triangle area against the bounding box
    span = centers.max(axis=0) - centers.min(axis=0)
    bbox_area = float(span[0] * span[1])
    p0 = centers[0]
    far = centers[np.argmax(np.sum((centers - p0) ** 2, axis=1))]
    cross = np.abs(
        (far[0] - p0[0]) * (centers[:, 1] - p0[1])
        - (far[1] - p0[1]) * (centers[:, 0] - p0[0])
    )
    max_area = 0.5 * cross.max()
    if bbox_area == 0.0 or max_area <= COLLINEAR_REL_AREA * bbox_area:
        raise NumericError("leaf centers are collinear; cannot triangulate")

    # normalize coordinates for well-conditioned predicates
    origin = centers.min(axis=0)
    scale = float(span.max())
    norm = (centers - origin) / scale
    tri_idx = _bowyer_watson(norm)
    triangles = np.array(tri_idx, dtype=np.int64).reshape(-1, 3)
    return Triangulation(centers, values, triangles, tree)


def interpolate_evaluate(tri: Triangulation, tree: DensityTree, x) -> float:
    """Linear interpolation of leaf-center densities at x.

    Inside the convex hull of centers: barycentric interpolation on the
    containing triangle.  Outside the hull but inside the root box: the
    piecewise-constant density (planes extrapolate to negative values).
    Outside the root box: 0.  Results are clamped at 0.
    """
    if tri.tree is not tree:
        raise ConfigError("triangulation was built from a different tree")
    return float(interpolate_many(tri, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


def interpolate_many(tri: Triangulation, X) -> np.ndarray:
    """Vectorized interpolate_evaluate over an (n, 2) batch."""
    tree = tri.tree
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != 2:
        raise ConfigError(f"points have dimension {X.shape[1]}, expected 2")
    A = tri.vertices[tri.triangles[:, 0]]
    B = tri.vertices[tri.triangles[:, 1]]
    C = tri.vertices[tri.triangles[:, 2]]
    denom = (B[:, 0] - A[:, 0]) * (C[:, 1] - A[:, 1]) - (B[:, 1] - A[:, 1]) * (
        C[:, 0] - A[:, 0]
    )
    vals = tri.values[tri.triangles]
    out = np.empty(X.shape[0])
    eps = 1e-12
    for i, p in enumerate(X):
        w_a = (B[:, 0] - p[0]) * (C[:, 1] - p[1]) - (B[:, 1] - p[1]) * (C[:, 0] - p[0])
        w_b = (C[:, 0] - p[0]) * (A[:, 1] - p[1]) - (C[:, 1] - p[1]) * (A[:, 0] - p[0])
        w_c = denom - w_a - w_b
        lam = np.stack([w_a, w_b, w_c], axis=1) / denom[:, None]
        inside = (lam >= -eps).all(axis=1)
        hits = np.flatnonzero(inside)
        if hits.size:
            t = hits[0]
            out[i] = max(float(lam[t] @ vals[t]), 0.0)
        else:
            out[i] = tree.evaluate(p)
    return out


class InterpolatedTree:
    """Evaluator facade pairing a tree with its triangulation."""

    def __init__(self, tree: DensityTree, tri: Triangulation | None = None):
        self.tree = tree
        self.tri = tri if tri is not None else triangulate(tree)

    @property
    def ndim(self) -> int:
        return 2

    def evaluate(self, x) -> float:
        return interpolate_evaluate(self.tri, self.tree, x)

    def evaluate_many(self, X) -> np.ndarray:
        return interpolate_many(self.tri, X)

    def __call__(self, X) -> np.ndarray:
        return self.evaluate_many(X)
