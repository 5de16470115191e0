"""LTI plant, steady-state Kalman error covariance and the error ladder.

The remote estimator's error covariance always sits on one rung of the
ladder ``Pbar, h(Pbar), h^2(Pbar), ...`` where ``h(X) = A X A' + Q`` and
``Pbar`` is the steady-state (measurement-updated) covariance of the
sensor's local Kalman filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidModel, NonConvergence

SYM_TOL = 1e-12
PBH_UNSTABLE_MARGIN = 1e-9
NORMAL_TOL = 1e-10


def _as_matrix(x, name):
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a matrix, got ndim={arr.ndim}")
    return arr


def _psd_sqrt(M):
    w, V = np.linalg.eigh((M + M.T) / 2)
    return V @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ V.T


def _rank(M):
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > 1e-8 * s[0]))


@dataclass(frozen=True)
class SystemModel:
    """Linear time-invariant plant ``x+ = A x + w``, ``y = C x + v``.

    Construction validates the noise covariances and the detectability /
    controllability assumptions (PBH rank tests), raising
    :class:`InvalidModel` when any of them fails.
    """

    A: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        C = _as_matrix(self.C, "C")
        Q = _as_matrix(self.Q, "Q")
        R = _as_matrix(self.R, "R")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if C.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} columns, got {C.shape}")
        m = C.shape[0]
        if Q.shape != (n, n):
            raise DimensionMismatch(f"Q must be {n}x{n}, got {Q.shape}")
        if R.shape != (m, m):
            raise DimensionMismatch(f"R must be {m}x{m}, got {R.shape}")
        for arr in (A, C, Q, R):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        self._validate()

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def _validate(self):
        A, C, Q, R = self.A, self.C, self.Q, self.R
        if np.max(np.abs(Q - Q.T), initial=0.0) > SYM_TOL:
            raise InvalidModel("Q is not symmetric")
        if np.max(np.abs(R - R.T), initial=0.0) > SYM_TOL:
            raise InvalidModel("R is not symmetric")
        qscale = max(1.0, np.max(np.abs(Q)))
        if np.linalg.eigvalsh(Q).min() < -SYM_TOL * qscale:
            raise InvalidModel("Q is not positive semidefinite")
        if np.linalg.eigvalsh(R).min() <= 0.0:
            raise InvalidModel("R is not positive definite")

        n = self.n
        eye = np.eye(n)
        sqrtQ = _psd_sqrt(Q)
        for lam in np.linalg.eigvals(A):
            shifted = A - lam * eye
            if abs(lam) >= 1.0 - PBH_UNSTABLE_MARGIN:
                if _rank(np.vstack([shifted, C])) < n:
                    raise InvalidModel(f"(A, C) is not detectable (mode {lam:.6g})")
            if _rank(np.hstack([shifted, sqrtQ])) < n:
                raise InvalidModel(f"(A, sqrt(Q)) is not controllable (mode {lam:.6g})")

    @classmethod
    def scalar(cls, a, c, q, r):
        return cls([[a]], [[c]], [[q]], [[r]])


@dataclass(frozen=True)
class SteadyState:
    Pbar: np.ndarray
    iterations: int
    residual: float


@dataclass(frozen=True)
class ErrorLadder:
    """Rungs ``h^0(Pbar) .. h^T(Pbar)`` with their traces.

    ``diffs[i-1]`` holds ``Tr(h^i(Pbar) - h^{i-1}(Pbar))`` for ``i = 1..T``.
    """

    rungs: tuple
    traces: np.ndarray
    diffs: np.ndarray

    @property
    def T(self) -> int:
        return len(self.rungs) - 1

    @property
    def Pbar(self) -> np.ndarray:
        return self.rungs[0]

    def min_increment_eigs(self) -> np.ndarray:
        """Smallest eigenvalue of ``rungs[i+1] - rungs[i]`` for each i."""
        return np.array([np.linalg.eigvalsh(b - a).min()
                         for a, b in zip(self.rungs[:-1], self.rungs[1:])])


def _riccati_step(sys: SystemModel, P):
    A, C, Q, R = sys.A, sys.C, sys.Q, sys.R
    prior = A @ P @ A.T + Q
    S = C @ prior @ C.T + R
    K = np.linalg.solve(S, C @ prior).T
    post = prior - K @ C @ prior
    return (post + post.T) / 2


def riccati_step(sys: SystemModel, P):
    """One predict + measurement-update of the filter error covariance."""
    P = _as_matrix(P, "P")
    if P.shape != (sys.n, sys.n):
        raise DimensionMismatch(f"P must be {sys.n}x{sys.n}, got {P.shape}")
    return _riccati_step(sys, P)


def steady_state(sys: SystemModel, tol: float = 1e-10, max_iter: int = 100_000) -> SteadyState:
    """Fixed point of the filtered Riccati map, iterated from ``P0 = Q``.

    Raises
    ------
    NonConvergence
        If the max-norm change of one step still exceeds ``tol`` after
        ``max_iter`` steps.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    P = sys.Q.copy()
    residual = np.inf
    for it in range(1, max_iter + 1):
        nxt = _riccati_step(sys, P)
        residual = float(np.max(np.abs(nxt - P)))
        P = nxt
        if residual <= tol:
            P.setflags(write=False)
            return SteadyState(Pbar=P, iterations=it, residual=residual)
    raise NonConvergence(
        f"Riccati iteration residual {residual:.3e} > tol {tol:.1e} after {max_iter} steps")


def ladder_step(sys: SystemModel, X) -> np.ndarray:
    """``h(X) = A X A' + Q``, symmetrised."""
    X = _as_matrix(X, "X")
    if X.shape != (sys.n, sys.n):
        raise DimensionMismatch(f"X must be {sys.n}x{sys.n}, got {X.shape}")
    Y = sys.A @ X @ sys.A.T + sys.Q
    return (Y + Y.T) / 2


def build_ladder(sys: SystemModel, ss: SteadyState | np.ndarray, T: int) -> ErrorLadder:
    if T < 1:
        raise ValueError("T must be >= 1")
    Pbar = ss.Pbar if isinstance(ss, SteadyState) else _as_matrix(ss, "Pbar")
    rungs = [np.array(Pbar, dtype=float)]
    for _ in range(T):
        rungs.append(ladder_step(sys, rungs[-1]))
    for r in rungs:
        r.setflags(write=False)
    traces = np.array([np.trace(r) for r in rungs])
    diffs = np.diff(traces)
    traces.setflags(write=False)
    diffs.setflags(write=False)
    return ErrorLadder(rungs=tuple(rungs), traces=traces, diffs=diffs)


@dataclass(frozen=True)
class SpectralReport:
    eigs_AtA: np.ndarray
    min_eig: float
    is_normal: bool
    normality_gap: float = field(default=0.0)


def spectral_check(sys: SystemModel) -> SpectralReport:
    A = sys.A
    AtA = A.T @ A
    eigs = np.sort(np.linalg.eigvalsh(AtA))
    gap = float(np.max(np.abs(AtA - A @ A.T)))
    return SpectralReport(eigs_AtA=eigs, min_eig=float(eigs[0]),
                          is_normal=gap <= NORMAL_TOL, normality_gap=gap)
