"""Sparse packet design.

Three solvers for the packet problem at state x: minimize the number of
nonzero entries of u subject to ||G u - H x||^2 <= x^T W x. Orthogonal
Matching Pursuit is the production path, exhaustive enumeration is the
small-horizon oracle, and an l1-regularized proximal solver stands in
for the fixed-bound baseline it is compared against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateInput, DimensionMismatch, Infeasible, NoConvergence
from .lifting import HorizonData
from .numerics import as_matrix, as_vector, solve_least_squares, sym_eigenvalues

FEASIBILITY_REL_SLACK = 1e-7
# below this absolute scale the threshold sits in the denormal range where
# relative margins are meaningless, so infeasibility is never diagnosed
FEASIBILITY_ABS_FLOOR = 1e-280
L1_MAX_ITERATIONS = 5000
L1_REL_TOL = 1e-10
L1_TRUNCATION_REL = 1e-9


@dataclass(frozen=True)
class ControlPacket:
    """A designed input sequence with its sparsity bookkeeping.

    support lists exactly the indices with nonzero coefficients, so
    len(support) is the l0 count. residual_sq is ||G coeffs - H x||^2 at
    the solution and threshold the bound it was designed against (state
    dependent for OMP and the oracle, caller supplied for the l1 solver,
    which does not promise residual_sq <= threshold).
    """

    coeffs: np.ndarray
    support: tuple[int, ...]
    residual_sq: float
    threshold: float
    iterations: int

    @property
    def l0(self) -> int:
        return len(self.support)


def _packet(coeffs: np.ndarray, residual_sq: float, threshold: float,
            iterations: int) -> ControlPacket:
    coeffs = coeffs.copy()
    coeffs.setflags(write=False)
    support = tuple(int(i) for i in np.flatnonzero(coeffs != 0.0))
    return ControlPacket(coeffs=coeffs, support=support,
                         residual_sq=float(residual_sq),
                         threshold=float(threshold),
                         iterations=int(iterations))


def _design_inputs(h: HorizonData, W, x):
    W = as_matrix(W, "W")
    x = as_vector(x, "x")
    if W.shape != (h.n, h.n) or x.size != h.n:
        raise DimensionMismatch(
            f"expected W {h.n}x{h.n} and x of length {h.n}, "
            f"got {W.shape} and {x.size}"
        )
    y = h.H @ x
    eps = float(x @ (W @ x))
    return x, y, eps


def _refit(G: np.ndarray, support: np.ndarray, y: np.ndarray):
    """Least-squares coefficients on the given columns and the new residual."""
    cols = G[:, support]
    sol = solve_least_squares(cols, y)
    r = y - cols @ sol
    return sol, r


def omp_design(h: HorizonData, W, x, *, normalize: bool = True) -> ControlPacket:
    """Orthogonal Matching Pursuit for the state-dependent packet problem.

    Grows the support greedily from the residual r = H x - G u, picking
    the column most correlated with r (normalized by column norm unless
    normalize=False; ties break to the smallest index), refitting by
    least squares, and stopping as soon as ||r||^2 <= x^T W x. Feasible
    by construction for a valid synthesis: the full-support residual is
    x^T (P - Q) x, which sits below the threshold by the margin x^T E x.
    """
    x, y, eps = _design_inputs(h, W, x)
    G = h.G
    r = y
    rr = float(r @ r)
    in_support = np.zeros(h.N, dtype=bool)
    coeffs = np.zeros(h.N)
    iterations = 0
    col_norms = np.sqrt(np.einsum("ij,ij->j", G, G)) if normalize else None
    while rr > eps and iterations < h.N:
        corr = np.abs(G.T @ r)
        if normalize:
            corr = corr / col_norms
        corr[in_support] = -np.inf
        in_support[int(np.argmax(corr))] = True
        support = np.flatnonzero(in_support)
        sol, r = _refit(G, support, y)
        rr = float(r @ r)
        iterations += 1
        coeffs = np.zeros(h.N)
        coeffs[support] = sol
    if rr > eps * (1.0 + FEASIBILITY_REL_SLACK) + FEASIBILITY_ABS_FLOOR:
        raise Infeasible(
            f"full-support residual {rr:.6e} exceeds threshold {eps:.6e}; "
            "the synthesis that produced W is inconsistent"
        )
    return _packet(coeffs, rr, eps, iterations)


def exhaustive_design(h: HorizonData, W, x, max_N: int = 12) -> ControlPacket:
    """Globally sparsest feasible packet by support enumeration.

    Tries supports in order of increasing cardinality, lexicographic
    within a cardinality, and returns the first whose least-squares
    residual meets the threshold. iterations counts supports evaluated.
    Exponential in N; refuses horizons beyond max_N.
    """
    if h.N > max_N:
        raise ConfigError(f"horizon {h.N} exceeds exhaustive-search limit {max_N}")
    x, y, eps = _design_inputs(h, W, x)
    G = h.G
    tried = 1
    rr = float(y @ y)
    if rr <= eps:
        return _packet(np.zeros(h.N), rr, eps, tried)
    for size in range(1, h.N + 1):
        for support in itertools.combinations(range(h.N), size):
            cols = np.asarray(support, dtype=int)
            sol, r = _refit(G, cols, y)
            rr = float(r @ r)
            tried += 1
            if rr <= eps:
                coeffs = np.zeros(h.N)
                coeffs[cols] = sol
                return _packet(coeffs, rr, eps, tried)
    if rr > eps * (1.0 + FEASIBILITY_REL_SLACK) + FEASIBILITY_ABS_FLOOR:
        raise Infeasible(
            f"full-support residual {rr:.6e} exceeds threshold {eps:.6e}; "
            "the synthesis that produced W is inconsistent"
        )
    coeffs = np.zeros(h.N)
    sol, r = _refit(G, np.arange(h.N), y)
    coeffs[:] = sol
    return _packet(coeffs, float(r @ r), eps, tried)


def _soft_threshold(z: np.ndarray, amount: float) -> np.ndarray:
    return np.sign(z) * np.maximum(np.abs(z) - amount, 0.0)


def l1_design(h: HorizonData, x, lam: float, fixed_bound: float, *,
              max_iterations: int = L1_MAX_ITERATIONS,
              rel_tol: float = L1_REL_TOL) -> ControlPacket:
    """Baseline design minimizing lam * ||u||_1 + 0.5 * ||G u - H x||^2.

    Accelerated proximal gradient with step 1/L, L the top eigenvalue of
    G^T G, momentum restarted whenever the objective rises. Stops when
    the relative objective change drops below rel_tol. Near-zero entries
    (below L1_TRUNCATION_REL of the largest) are truncated to exact zero
    before sparsity accounting. The packet records fixed_bound as its
    threshold for comparison purposes only; no feasibility is promised.
    """
    lam = float(lam)
    if not lam > 0.0 or not np.isfinite(lam):
        raise ConfigError(f"lam must be a positive real, got {lam!r}")
    fixed_bound = float(fixed_bound)
    if fixed_bound < 0.0 or not np.isfinite(fixed_bound):
        raise ConfigError(f"fixed_bound must be non-negative, got {fixed_bound!r}")
    x = as_vector(x, "x")
    if x.size != h.n:
        raise DimensionMismatch(f"expected x of length {h.n}, got {x.size}")
    y = h.H @ x
    K = h.G.T @ h.G
    b = h.G.T @ y
    yty = float(y @ y)
    lipschitz = float(sym_eigenvalues(K)[-1])
    if lipschitz <= 0.0:
        raise DegenerateInput("lifted input map has zero energy")
    step = 1.0 / lipschitz
    shrink = lam * step

    def objective(v: np.ndarray) -> float:
        return float(0.5 * (v @ (K @ v)) - b @ v + 0.5 * yty
                     + lam * np.abs(v).sum())

    u = np.zeros(h.N)
    momentum = u
    t = 1.0
    f_prev = objective(u)
    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        grad = K @ momentum - b
        u_next = _soft_threshold(momentum - step * grad, shrink)
        f = objective(u_next)
        if f > f_prev:
            # momentum overshot: fall back to a plain proximal step from
            # the last iterate, which can never increase the objective
            grad = K @ u - b
            u_next = _soft_threshold(u - step * grad, shrink)
            f = objective(u_next)
            t = 1.0
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        momentum = u_next + ((t - 1.0) / t_next) * (u_next - u)
        u = u_next
        t = t_next
        if abs(f_prev - f) <= rel_tol * (1.0 + abs(f)):
            converged = True
            break
        f_prev = f
    if not converged:
        raise NoConvergence(
            f"l1 solver missed tolerance {rel_tol:.1e} "
            f"after {max_iterations} iterations"
        )
    peak = float(np.abs(u).max()) if u.size else 0.0
    if peak > 0.0:
        u[np.abs(u) < L1_TRUNCATION_REL * peak] = 0.0
    r = h.G @ u - y
    return _packet(u, float(r @ r), fixed_bound, iterations)
