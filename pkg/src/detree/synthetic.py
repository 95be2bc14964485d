"""Seeded synthetic samples: mixtures of uniform boxes and normal blobs.

Includes the ``d0-demo`` preset: a narrow peak at 1.865 over a flat
component on [1.815, 1.915], with signal-like and sideband sub-samples,
mimicking a two-body mass spectrum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datatable import DataTable
from .errors import ConfigError


@dataclass(frozen=True)
class UniformBox:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ConfigError(f"bad uniform component bounds lo={lo}, hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def ndim(self) -> int:
        return len(self.lo)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(n, self.ndim))

    def density(self, X: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        inside = ((X >= lo) & (X <= hi)).all(axis=1)
        return inside / float(np.prod(hi - lo))


@dataclass(frozen=True)
class NormalBlob:
    mean: tuple[float, ...]
    sigma: tuple[float, ...]

    def __post_init__(self):
        mean = tuple(float(v) for v in self.mean)
        sigma = tuple(float(v) for v in self.sigma)
        if len(mean) != len(sigma) or any(s <= 0 for s in sigma):
            raise ConfigError(f"bad normal component mean={mean}, sigma={sigma}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma", sigma)

    @property
    def ndim(self) -> int:
        return len(self.mean)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, self.sigma, size=(n, self.ndim))

    def density(self, X: np.ndarray) -> np.ndarray:
        out = np.ones(X.shape[0])
        for k, (m, s) in enumerate(zip(self.mean, self.sigma)):
            z = (X[:, k] - m) / s
            out *= np.exp(-0.5 * z * z) / (s * math.sqrt(2.0 * math.pi))
        return out


@dataclass(frozen=True)
class SyntheticSpec:
    """Mixture description: components, normalized weights, names, size."""

    components: tuple
    weights: tuple[float, ...]
    columns: tuple[str, ...]
    size: int
    seed: int = 0

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise ConfigError("mixture needs at least one component")
        ndim = components[0].ndim
        if any(c.ndim != ndim for c in components):
            raise ConfigError("mixture components disagree on dimension")
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != len(components) or any(w < 0 for w in weights):
            raise ConfigError(
                f"weights must be non-negative, one per component: {weights}"
            )
        total = sum(weights)
        if total <= 0:
            raise ConfigError("at least one mixture weight must be positive")
        weights = tuple(w / total for w in weights)
        columns = tuple(str(c) for c in self.columns)
        if len(columns) != ndim:
            raise ConfigError(f"{len(columns)} column names for {ndim} dimensions")
        if self.size < 1:
            raise ConfigError(f"sample size must be >= 1, got {self.size}")
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "columns", columns)

    def density(self, X: np.ndarray) -> np.ndarray:
        """Exact mixture density, for oracle checks against trained models."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        out = np.zeros(X.shape[0])
        for w, comp in zip(self.weights, self.components):
            out += w * comp.density(X)
        return out


def generate_synthetic(spec: SyntheticSpec, return_labels: bool = False):
    """Draw the mixture sample; deterministic for a given seed.

    Component counts are multinomial in the weights; rows are shuffled
    so component order leaves no trace.  With ``return_labels`` the
    component index of each row is returned alongside.
    """
    rng = np.random.default_rng(spec.seed)
    counts = rng.multinomial(spec.size, spec.weights)
    blocks = []
    labels = []
    for i, (comp, n) in enumerate(zip(spec.components, counts)):
        if n:
            blocks.append(comp.draw(rng, n))
            labels.append(np.full(n, i))
    X = np.vstack(blocks)
    lab = np.concatenate(labels)
    perm = rng.permutation(spec.size)
    table = DataTable(X[perm], spec.columns)
    if return_labels:
        return table, lab[perm]
    return table


D0_MASS_MEAN = 1.865
D0_MASS_SIGMA = 0.01
D0_MASS_WINDOW = (1.815, 1.915)
D0_SIDEBANDS = ((1.815, 1.840), (1.890, 1.915))
D0_IP_SIGMA = 0.04
D0_IP_RANGE = (-0.25, 0.25)


def d0_demo_spec(n: int, seed: int = 0, subset: str = "all") -> SyntheticSpec:
    """The ``d0-demo`` preset in mass x impact-parameter space.

    ``subset`` selects the mixture ('all'), the pure peaked component
    ('signal'), or the flat component restricted to the two mass
    sidebands ('sideband').
    """
    columns = ("m", "ip")
    signal = NormalBlob((D0_MASS_MEAN, 0.0), (D0_MASS_SIGMA, D0_IP_SIGMA))
    flat = UniformBox(
        (D0_MASS_WINDOW[0], D0_IP_RANGE[0]), (D0_MASS_WINDOW[1], D0_IP_RANGE[1])
    )
    if subset == "all":
        return SyntheticSpec((signal, flat), (0.5, 0.5), columns, n, seed)
    if subset == "signal":
        return SyntheticSpec((signal,), (1.0,), columns, n, seed)
    if subset == "sideband":
        low = UniformBox(
            (D0_SIDEBANDS[0][0], D0_IP_RANGE[0]), (D0_SIDEBANDS[0][1], D0_IP_RANGE[1])
        )
        high = UniformBox(
            (D0_SIDEBANDS[1][0], D0_IP_RANGE[0]), (D0_SIDEBANDS[1][1], D0_IP_RANGE[1])
        )
        return SyntheticSpec((low, high), (0.5, 0.5), columns, n, seed)
    raise ConfigError(f"unknown d0-demo subset {subset!r}")


PRESETS = {"d0-demo": d0_demo_spec}


def preset_spec(name: str, n: int, seed: int = 0, subset: str = "all") -> SyntheticSpec:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return PRESETS[name](n, seed, subset)


def spec_from_doc(doc: dict, n: int, seed: int) -> SyntheticSpec:
    """Build a mixture from a JSON document (see the CLI synth command)."""
    try:
        columns = [str(c) for c in doc["columns"]]
        weights = [float(w) for w in doc["weights"]]
        comp_docs = doc["components"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad synthetic spec document: {exc}") from exc
    components = []
    for cd in comp_docs:
        kind = cd.get("kind")
        if kind == "uniform":
            components.append(UniformBox(tuple(cd["lo"]), tuple(cd["hi"])))
        elif kind == "normal":
            components.append(NormalBlob(tuple(cd["mean"]), tuple(cd["sigma"])))
        else:
            raise ConfigError(f"unknown component kind {kind!r}")
    return SyntheticSpec(tuple(components), tuple(weights), tuple(columns), n, seed)
