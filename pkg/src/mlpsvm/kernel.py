"""Kernel evaluation and the shared within-label Gram matrix."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

FAMILIES = ("linear", "rbf", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    family: str = "linear"
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 1.0

    def __post_init__(self):
        family = {"poly": "polynomial"}.get(self.family, self.family)
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if family == "rbf" and not self.gamma > 0:
            raise ValueError("rbf kernel needs gamma > 0")
        if family == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise ValueError("polynomial kernel needs an integer degree >= 1")
            if not np.isfinite(self.coef0):
                raise ValueError("polynomial coef0 must be finite")

    @property
    def is_linear(self) -> bool:
        return self.family == "linear"

    def to_dict(self) -> dict:
        if self.family == "linear":
            return {"family": "linear"}
        if self.family == "rbf":
            return {"family": "rbf", "gamma": self.gamma}
        return {"family": "polynomial", "degree": int(self.degree), "coef0": self.coef0}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(**d)


def eval_kernel(x, z, spec: KernelSpec) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape or x.ndim != 1:
        raise ValueError(f"kernel arguments must be vectors of equal length, got {x.shape} and {z.shape}")
    if spec.family == "linear":
        return float(x @ z)
    if spec.family == "rbf":
        diff = x - z
        return float(np.exp(-spec.gamma * (diff @ diff)))
    return float((x @ z + spec.coef0) ** spec.degree)


def cross_kernel(A, B, spec: KernelSpec) -> np.ndarray:
    """Kernel values between the rows of ``A`` and the rows of ``B``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"feature dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    dots = A @ B.T
    if spec.family == "linear":
        return dots
    if spec.family == "rbf":
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * dots
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-spec.gamma * sq)
    return (dots + spec.coef0) ** spec.degree


def fingerprint(features) -> str:
    arr = np.ascontiguousarray(features, dtype=np.float64)
    h = hashlib.sha256()
    h.update(str(arr.shape).encode())
    h.update(arr.tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Dense kernel matrix over the training rows.

    Every dual term pairs an instance with another instance *for the same
    label*, so one m x m matrix of k(x_i, x_k) serves all labels.
    """

    values: np.ndarray
    spec: KernelSpec
    source: str

    @property
    def size(self) -> int:
        return self.values.shape[0]


def within_label_gram(features, spec: KernelSpec) -> GramMatrix:
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("features must be a non-empty 2-D matrix")
    K = cross_kernel(X, X, spec)
    # symmetrize away the rounding asymmetry of the rbf expansion
    K = 0.5 * (K + K.T)
    K.setflags(write=False)
    return GramMatrix(values=K, spec=spec, source=fingerprint(X))


def block_embed(x, j: int, d: int) -> np.ndarray:
    """Copy ``x`` into coordinate block ``j`` of ``d`` blocks, zeros elsewhere."""
    x = np.asarray(x, dtype=float)
    if not 0 <= j < d:
        raise ValueError(f"label index {j} outside [0, {d})")
    out = np.zeros(x.size * d)
    out[j * x.size:(j + 1) * x.size] = x
    return out


def stack_rows(W) -> np.ndarray:
    """Concatenate the per-label weight rows into one long vector."""
    return np.asarray(W, dtype=float).reshape(-1)
