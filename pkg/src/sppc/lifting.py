"""Horizon lifting: stacked prediction matrices and the weighted cost map.

For a horizon of N steps the predicted states [x_1; ...; x_N] equal
Phi @ u + Upsilon @ x, with Phi block lower-triangular (block (i, j) is
A^(i-j) B) and Upsilon stacking A, A^2, ..., A^N. The stage weights live
in the block-diagonal Qbar (N-1 copies of Q, then the terminal P), and
G = Qbar^(1/2) Phi, H = -Qbar^(1/2) Upsilon turn the summed quadratic
cost into the single residual ||G u - H x||^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigError, DimensionMismatch
from .numerics import as_matrix, as_vector, cholesky
from .plant import PlantModel


@dataclass(frozen=True)
class HorizonData:
    """Lifted matrices for one (plant, Q, P, N) combination."""

    N: int
    Phi: np.ndarray          # (n N, N)
    Upsilon: np.ndarray      # (n N, n)
    Qbar: np.ndarray         # (n N, n N)
    sqrt_weight: np.ndarray  # (n N, n N) block factor R with R.T @ R == Qbar
    G: np.ndarray            # sqrt_weight @ Phi
    H: np.ndarray            # -sqrt_weight @ Upsilon

    @property
    def n(self) -> int:
        return self.Upsilon.shape[1]


def build_horizon(plant: PlantModel, Q, P, N: int) -> HorizonData:
    """Assemble HorizonData for horizon N >= 1 with SPD weights Q and P.

    The weight square root is taken blockwise: each diagonal block
    contributes the transpose of its Cholesky factor, so only two factors
    are ever computed. Any factor R with R.T @ R equal to the block gives
    the same residual norms.
    """
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ConfigError(f"horizon N must be a positive integer, got {N!r}")
    N = int(N)
    n = plant.n
    Q = as_matrix(Q, "Q")
    P = as_matrix(P, "P")
    if Q.shape != (n, n) or P.shape != (n, n):
        raise DimensionMismatch(f"Q and P must be {n} x {n}")
    rq = cholesky(Q).T
    rp = cholesky(P).T

    ab = [plant.B[:, 0]]
    for _ in range(N - 1):
        ab.append(plant.A @ ab[-1])
    phi = np.zeros((n * N, N))
    for j in range(N):
        for i in range(j, N):
            phi[i * n:(i + 1) * n, j] = ab[i - j]

    powers = [plant.A]
    for _ in range(N - 1):
        powers.append(plant.A @ powers[-1])
    upsilon = np.vstack(powers)

    blocks = [Q] * (N - 1) + [P]
    qbar = scipy.linalg.block_diag(*blocks)
    sqrt_weight = scipy.linalg.block_diag(*([rq] * (N - 1) + [rp]))

    g = sqrt_weight @ phi
    h = -(sqrt_weight @ upsilon)
    for arr in (phi, upsilon, qbar, sqrt_weight, g, h):
        arr.setflags(write=False)
    return HorizonData(N=N, Phi=phi, Upsilon=upsilon, Qbar=qbar,
                       sqrt_weight=sqrt_weight, G=g, H=h)


def stage_cost(h: HorizonData, u, x) -> float:
    """||G u - H x||^2: the Q-weighted stage sum plus the terminal P term."""
    u = as_vector(u, "u")
    x = as_vector(x, "x")
    if u.size != h.N or x.size != h.n:
        raise DimensionMismatch(
            f"expected u of length {h.N} and x of length {h.n}, "
            f"got {u.size} and {x.size}"
        )
    r = h.G @ u - h.H @ x
    return float(r @ r)
