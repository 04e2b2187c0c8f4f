"""Discrete-time LTI plant with a scalar input: x(k+1) = A x(k) + B u(k)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NonConjugatePoles
from .numerics import as_matrix

# Pairing tolerance when validating that complex poles come in conjugate pairs.
_CONJUGATE_TOL = 1e-9


@dataclass(frozen=True)
class PlantModel:
    """State-space pair (A, B); A is n x n, B an n x 1 column."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = as_matrix(self.A, "A")
        if a.shape[0] != a.shape[1]:
            raise DimensionMismatch(f"A must be square, got shape {a.shape}")
        b = np.asarray(self.B, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        b = as_matrix(b, "B")
        if b.shape != (a.shape[0], 1):
            raise DimensionMismatch(
                f"B must be a {a.shape[0]} x 1 column, got shape {b.shape}"
            )
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def step(plant: PlantModel, x, u: float) -> np.ndarray:
    """One plant update: A x + B u."""
    x = np.asarray(x, dtype=float)
    if x.shape != (plant.n,):
        raise DimensionMismatch(f"state must have shape ({plant.n},), got {x.shape}")
    if not (np.all(np.isfinite(x)) and np.isfinite(u)):
        raise DimensionMismatch("state and input must be finite")
    return plant.A @ x + plant.B[:, 0] * float(u)


def _require_conjugate_closed(roots: np.ndarray) -> None:
    pending = [r for r in roots if abs(r.imag) > _CONJUGATE_TOL * (1.0 + abs(r))]
    while pending:
        r = pending.pop()
        for idx, cand in enumerate(pending):
            if abs(cand - r.conjugate()) <= _CONJUGATE_TOL * (1.0 + abs(r)):
                del pending[idx]
                break
        else:
            raise NonConjugatePoles(f"pole {r} has no conjugate partner")


def from_poles(poles) -> PlantModel:
    """Controllable-canonical realization of the plant with the given poles.

    A is the companion matrix (last row carries the negated characteristic
    coefficients) of the real monic polynomial with the given roots, and
    B = [0, ..., 0, 1]^T, which is reachable by construction. Complex poles
    must appear in conjugate pairs.
    """
    roots = np.atleast_1d(np.asarray(poles, dtype=complex))
    if roots.ndim != 1 or roots.size == 0:
        raise DimensionMismatch("poles must be a non-empty 1-D sequence")
    _require_conjugate_closed(roots)
    coeffs = np.poly(roots).real  # [1, c1, ..., cn], descending powers
    n = roots.size
    a = np.eye(n, k=1)
    a[-1, :] = -coeffs[-1:0:-1]
    b = np.zeros((n, 1))
    b[-1, 0] = 1.0
    return PlantModel(a, b)


def reachability_matrix(plant: PlantModel) -> np.ndarray:
    """[B, AB, ..., A^(n-1) B], n x n for a scalar-input plant."""
    cols = [plant.B[:, 0]]
    for _ in range(plant.n - 1):
        cols.append(plant.A @ cols[-1])
    return np.column_stack(cols)

def is_reachable(plant: PlantModel) -> bool:
    """Full-rank test of the reachability matrix (relative tolerance 1e-10)."""
    sv = np.linalg.svd(reachability_matrix(plant), compute_uv=False)
    return bool(sv[0] > 0.0 and sv[-1] > 1e-10 * sv[0])
