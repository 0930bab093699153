# -*- coding: utf-8 -*-
"""
Dense matrix kernels: discrete Lyapunov and Riccati solvers, spectral radius,
symmetric eigendecomposition, controllability rank and the closed-loop
spectral density.

All functions are pure and safe to call concurrently.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from ErgodicRiskLQR.Errors import NoConvergence, NonSymmetricInput, NotSchurStable
from ErgodicRiskLQR.Utils import ToolboxLogger, config_key


@dataclass(frozen=True)
class SpectrumResult :
    """Eigenpairs of a symmetric matrix, eigenvalues sorted descending.

    ``vectors[:, j]`` is the unit eigenvector of ``values[j]``.
    """
    values: np.ndarray
    vectors: np.ndarray

    @property
    def pairs(self) :
        return [(float(v), self.vectors[:, j]) for j, v in enumerate(self.values)]

    def reconstruct(self) :
        return (self.vectors * self.values) @ self.vectors.T


def resolve_margin(margin) :
    return config_key("STABILITY_MARGIN") if margin is None else margin


def as_square(A, name="matrix") :
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1 :
        raise ValueError("{} must be a non-empty square matrix, got shape {}".format(name, A.shape))
    if not np.all(np.isfinite(A)) :
        raise ValueError("{} has non-finite entries".format(name))
    return A


def check_symmetric(S, name="matrix", tol=None) :
    """Return the symmetrized matrix, raising NonSymmetricInput past ``tol`` (relative)."""
    S = as_square(S, name)
    tol = config_key("SYMMETRY_TOL") if tol is None else tol
    if la.norm(S - S.T) > tol * max(1.0, la.norm(S)) :
        raise NonSymmetricInput("{} is not symmetric (asymmetry {:.3e})".format(name, la.norm(S - S.T)))
    return 0.5 * (S + S.T)


def spectral_radius(A) :
    A = as_square(A)
    return float(np.max(np.abs(la.eigvals(A))))


def is_schur_stable(A, margin=None) :
    return spectral_radius(A) <= 1.0 - resolve_margin(margin)


def _require_stable(A, margin) :
    rho = spectral_radius(A)
    if rho > 1.0 - resolve_margin(margin) :
        raise NotSchurStable("spectral radius {:.12g} is not below 1 - margin".format(rho), rho=rho)
    return rho


def solve_dlyap(A, S, margin=None) :
    """Solve X = A X A^T + S for Schur stable A.

    Kronecker vectorization up to DLYAP_KRONECKER_MAX_N states, squaring
    (doubling) iteration above that.
    """
    A = as_square(A, "A")
    S = check_symmetric(S, "S")
    if S.shape != A.shape :
        raise ValueError("A is {} but S is {}".format(A.shape, S.shape))
    _require_stable(A, margin)

    n = A.shape[0]
    if n <= config_key("DLYAP_KRONECKER_MAX_N") :
        lhs = np.eye(n * n) - np.kron(A, A)
        X = la.solve(lhs, S.reshape(-1)).reshape(n, n)
    else :
        X = S.copy()
        Ak = A.copy()
        for _ in range(64) :
            X = X + Ak @ X @ Ak.T
            Ak = Ak @ Ak
            if la.norm(Ak, 2) ** 2 < 1e-18 :
                break
    return 0.5 * (X + X.T)


def dare_gain(A, B, R, P) :
    """Gain K = -(R + B^T P B)^{-1} B^T P A induced by a cost-to-go P."""
    return -la.solve(R + B.T @ P @ B, B.T @ P @ A, assume_a="pos")


def riccati_map(A, B, Q, R, P) :
    return Q + A.T @ P @ A - A.T @ P @ B @ la.solve(R + B.T @ P @ B, B.T @ P @ A, assume_a="pos")


def dare_residual(A, B, Q, R, P) :
    return la.norm(riccati_map(A, B, Q, R, P) - P) / max(1.0, la.norm(P))


@ToolboxLogger.log_method
def solve_dare(A, B, Q, R, tol=None, max_iter=None) :
    """Stabilizing solution of the DARE by Riccati fixed-point iteration from P0 = Q."""
    A = as_square(A, "A")
    B = np.atleast_2d(np.asarray(B, dtype=float))
    Q = check_symmetric(Q, "Q")
    R = check_symmetric(R, "R")
    tol = config_key("DARE_TOL") if tol is None else tol
    max_iter = config_key("DARE_MAX_ITER") if max_iter is None else max_iter

    P = Q.copy()
    for k in range(1, max_iter + 1) :
        P_next = riccati_map(A, B, Q, R, P)
        P_next = 0.5 * (P_next + P_next.T)
        if not np.all(np.isfinite(P_next)) :
            raise NoConvergence("Riccati iteration diverged at iteration {}".format(k), iterations=k)
        change = la.norm(P_next - P) / max(la.norm(P), np.finfo(float).tiny)
        P = P_next
        if change <= tol :
            ToolboxLogger.debug("DARE converged in {} iterations".format(k))
            return P
    raise NoConvergence("Riccati iteration did not converge in {} iterations".format(max_iter), iterations=max_iter)


def sym_eig(M, tol=1e-12) :
    M = check_symmetric(M, "M", tol=tol)
    values, vectors = la.eigh(M)
    order = np.argsort(values)[::-1]
    return SpectrumResult(values=values[order], vectors=vectors[:, order])


def _resolvent_stack(A_K, omegas) :
    n = A_K.shape[0]
    phase = np.exp(1j * np.asarray(omegas, dtype=float))
    return np.eye(n)[None, :, :] - phase[:, None, None] * A_K[None, :, :]


def spectral_density_grid(A_K, H, Sigma_W, omegas, margin=None) :
    """Sigma_Gamma(omega) for every omega in ``omegas``; shape (len(omegas), n, n)."""
    A_K = as_square(A_K, "A_K")
    _require_stable(A_K, margin)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    S = H @ np.atleast_2d(Sigma_W) @ H.T
    Rinv = np.linalg.inv(_resolvent_stack(A_K, omegas))
    out = Rinv @ S @ np.conj(Rinv.transpose(0, 2, 1))
    return 0.5 * (out + np.conj(out.transpose(0, 2, 1)))


def spectral_density(A_K, H, Sigma_W, omega, margin=None) :
    """(I - e^{iw} A_K)^{-1} H Sigma_W H^T (I - e^{-iw} A_K^T)^{-1}."""
    return spectral_density_grid(A_K, H, Sigma_W, [omega], margin=margin)[0]


def controllability_rank(A, H) :
    A = as_square(A, "A")
    H = np.atleast_2d(np.asarray(H, dtype=float))
    n = A.shape[0]
    blocks = [H]
    for _ in range(n - 1) :
        blocks.append(A @ blocks[-1])
    sv = la.svdvals(np.hstack(blocks))
    if sv.size == 0 or sv[0] == 0.0 :
        return 0
    return int(np.sum(sv > n * sv[0] * 1e-12))
