"""Synthetic datasets: overlapping label strips, concentric annuli, random subproblems."""

from __future__ import annotations

import numpy as np

from .dataset import Dataset
from .solver import LabelSubproblem

STRIP_WIDTH = 1.0
STRIP_GAP = 1.0
STRIP_HEIGHT = 3.0


def crossing_layout(n_per_strip: int):
    """Strip order along the first axis, as ``(slot, count, labels)``.

    Strip A (label 1 only) is dealt to both outer flanks, a quarter of it
    beyond strip B, so label 1's positives surround label 2's.  A single
    hyperplane cannot cut label 2 out of that without error; a slab can.
    """
    right = n_per_strip // 4
    return [(0, n_per_strip - right, (1, -1)),
            (1, n_per_strip, (1, 1)),
            (2, n_per_strip, (-1, 1)),
            (3, right, (1, -1))]


def generate_crossing(n_per_strip: int = 50, noise: float = 0.05, seed: int = 0) -> Dataset:
    if n_per_strip < 1:
        raise ValueError("n_per_strip must be at least 1")
    if not noise >= 0:
        raise ValueError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    X, Y, strip = [], [], []
    for slot, count, labels in crossing_layout(n_per_strip):
        if count == 0:
            continue
        lo = slot * (STRIP_WIDTH + STRIP_GAP)
        x0 = rng.uniform(lo, lo + STRIP_WIDTH, count)
        x1 = rng.uniform(0.0, STRIP_HEIGHT, count)
        X.append(np.column_stack([x0, x1]))
        Y.append(np.tile(labels, (count, 1)))
        strip += [slot] * count
    X = np.vstack(X)
    if noise > 0:
        X = X + noise * rng.standard_normal(X.shape)
    return Dataset(X, np.vstack(Y), name=f"crossing-{n_per_strip}-{seed}",
                   feature_names=("x0", "x1"), label_names=("label1", "label2"))


def crossing_strip(X) -> np.ndarray:
    """Nearest strip slot (0..3) for each row, by the first coordinate."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    centre = X[:, 0] - STRIP_WIDTH / 2
    return np.clip(np.rint(centre / (STRIP_WIDTH + STRIP_GAP)), 0, 3).astype(int)


def generate_annuli(m: int = 400, seed: int = 0, radius: float = 3.0,
                    rings=((1.0, 2.0), (1.8, 2.6))) -> Dataset:
    """Points uniform on a disk; label j is +1 inside ring ``rings[j]``."""
    rng = np.random.default_rng(seed)
    r = radius * np.sqrt(rng.uniform(0, 1, m))
    phi = rng.uniform(0, 2 * np.pi, m)
    X = np.column_stack([r * np.cos(phi), r * np.sin(phi)])
    Y = np.column_stack([np.where((r >= lo) & (r <= hi), 1, -1) for lo, hi in rings])
    return Dataset(X, Y, name=f"annuli-{m}-{seed}", feature_names=("x0", "x1"),
                   label_names=tuple(f"ring{j + 1}" for j in range(len(rings))))


def generate_slabs(n_per_slab: int = 40, seed: int = 0, spacing: float = 10.0) -> Dataset:
    """Widely separated one-label-per-slab data on a 2 x 2 lattice per slab.

    Points repeat lattice sites, so held-out points never lie beyond every
    training positive; the upper hyperplane hugs the outermost training
    positive and would otherwise reject such points.
    """
    rng = np.random.default_rng(seed)
    X, Y = [], []
    for j in range(2):
        X.append(np.column_stack([j * spacing + rng.integers(0, 2, n_per_slab),
                                  rng.integers(0, 2, n_per_slab)]).astype(float))
        lab = -np.ones((n_per_slab, 2), dtype=int)
        lab[:, j] = 1
        Y.append(lab)
    return Dataset(np.vstack(X), np.vstack(Y), name=f"slabs-{n_per_slab}-{seed}")


def random_subproblem(rng, m_range=(6, 40), n_range=(1, 5), c_values=(0.1, 1.0, 10.0),
                      label=0) -> LabelSubproblem:
    """Gaussian features, random signs with both classes present, C1/C2 drawn from ``c_values``."""
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    X = rng.standard_normal((m, n))
    while True:
        y = rng.choice([-1.0, 1.0], size=m)
        if 0 < np.sum(y > 0) < m:
            break
    C1 = float(rng.choice(c_values))
    C2 = float(rng.choice(c_values))
    return LabelSubproblem(y, C1, C2, features=X, label=label)
