"""IMEX Runge-Kutta time stepping of Fourier-Galerkin states.

Advection ``A U_x`` is treated explicitly with ``(Hexp, bexp)``, relaxation
``Q U / epsilon`` implicitly with ``(Himp, bimp)``.  Every Fourier mode k
evolves independently with ``D_k = i k A``, so all operations work on the
(m, N + 1) coefficient array at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .densemat import LUFactors, expm, lu_factor
from .errors import NonCommensurateInterval, ShapeMismatch, SingularMatrix, SingularStageMatrix
from .relaxsys import RelaxationSystem
from .spectral import ModalState
from .tableaux import Tableau


@dataclass(frozen=True)
class StepPlan:
    system: RelaxationSystem
    tableau: Tableau
    dt: float
    mu: float
    factors: dict[float, LUFactors] = field(default_factory=dict)
    _propagators: dict[int, np.ndarray] = field(default_factory=dict, repr=False, compare=False)


def plan(system: RelaxationSystem, tableau: Tableau, dt: float) -> StepPlan:
    """Precompute the LU factors of I - mu h_ii Q for each distinct h_ii > 0."""
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")
    mu = dt / system.epsilon
    eye = np.eye(system.m)
    factors: dict[float, LUFactors] = {}
    for h in tableau.distinct_diagonal():
        if h <= 0.0:
            continue
        try:
            factors[h] = lu_factor(eye - mu * h * system.Q)
        except SingularMatrix as exc:
            raise SingularStageMatrix(f"I - mu*{h:g}*Q is singular (mu={mu:g})") from exc
    return StepPlan(system, tableau, dt, mu, factors)


def _solve_real(fac: LUFactors, rhs: np.ndarray) -> np.ndarray:
    # Q is real: one real factorization serves real and imaginary parts.
    L = rhs.shape[1]
    sol = fac.solve(np.concatenate([rhs.real, rhs.imag], axis=1))
    return sol[:, :L] + 1j * sol[:, L:]


def _advance(p: StepPlan, U: np.ndarray, k: np.ndarray) -> np.ndarray:
    """One step on a (m, L) coefficient block whose column j has wavenumber k[j]."""
    T = p.tableau
    A, Q = p.system.A, p.system.Q
    dt, mu = p.dt, p.mu
    ik = 1j * k
    adv: list[np.ndarray] = []
    rel: list[np.ndarray] = []
    for i in range(T.s):
        rhs = U.copy()
        for j in range(i):
            if T.Hexp[i, j] != 0.0:
                rhs -= (dt * T.Hexp[i, j]) * adv[j]
            if T.Himp[i, j] != 0.0:
                rhs += (mu * T.Himp[i, j]) * rel[j]
        hii = T.Himp[i, i]
        Ui = _solve_real(p.factors[float(hii)], rhs) if hii > 0.0 else rhs
        adv.append(ik * (A @ Ui))
        rel.append(Q @ Ui)
    out = U.copy()
    for j in range(T.s):
        if T.bexp[j] != 0.0:
            out -= (dt * T.bexp[j]) * adv[j]
        if T.bimp[j] != 0.0:
            out += (mu * T.bimp[j]) * rel[j]
    return out


def _check_state(p: StepPlan, state: ModalState) -> None:
    if state.m != p.system.m:
        raise ShapeMismatch(f"state has {state.m} components, system has {p.system.m}")


def step(p: StepPlan, state: ModalState) -> ModalState:
    _check_state(p, state)
    return ModalState(_advance(p, state.coeffs, np.arange(state.N + 1, dtype=float)))


def propagator(p: StepPlan, N: int) -> np.ndarray:
    """Per-mode one-step amplification matrices, shape (N + 1, m, m)."""
    cached = p._propagators.get(N)
    if cached is not None:
        return cached
    m = p.system.m
    k = np.repeat(np.arange(N + 1, dtype=float), m)
    basis = np.tile(np.eye(m, dtype=complex), N + 1)
    out = _advance(p, basis, k)
    R = out.reshape(m, N + 1, m).transpose(1, 0, 2).copy()
    p._propagators[N] = R
    return R


def step_count(dt: float, T: float) -> int:
    n = round(T / dt)
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise NonCommensurateInterval(f"T={T!r} is not an integer multiple of dt={dt!r}")
    return n


def integrate(p: StepPlan, state: ModalState, T: float, method: str = "propagator") -> ModalState:
    """Advance ``state`` by round(T/dt) steps.

    ``method="propagator"`` applies the cached per-mode one-step matrix,
    ``method="stages"`` re-runs the stage recursion every step; both are
    the same linear map.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    _check_state(p, state)
    n = step_count(p.dt, T)
    if method == "stages":
        U = state.coeffs
        k = np.arange(state.N + 1, dtype=float)
        for _ in range(n):
            U = _advance(p, U, k)
        return ModalState(U)
    if method != "propagator":
        raise ValueError(f"unknown method {method!r}")
    R = propagator(p, state.N)
    V = state.coeffs.T.copy()
    for _ in range(n):
        V = np.einsum("kij,kj->ki", R, V)
    return ModalState(V.T)


def mode_generator(system: RelaxationSystem, k: int) -> np.ndarray:
    return -1j * k * system.A + system.Q / system.epsilon


def _fixed_point(update, X0, tol: float = 1e-16, max_iter: int = 200):
    X = X0
    for _ in range(max_iter):
        Xn = update(X)
        if np.max(np.abs(Xn - X), initial=0.0) <= tol * (1.0 + np.max(np.abs(Xn), initial=0.0)):
            return Xn
        X = Xn
    return None


def decoupled_expm(G: np.ndarray, q: int, t: float) -> np.ndarray | None:
    """exp(tG) for G = [[G11, G12], [G21, G22]] with a stiff, invertible G22.

    Block-diagonalizes G (q slow components first) through the fixed points
    X = G22^-1 (X G11 + X G12 X - G21) and Y Gf = Gs Y + G12, then
    exponentiates the slow and fast blocks separately.  A plain scaling and
    squaring of the whole stiff matrix loses about eps*|tG| absolute
    accuracy in the slow block; this route does not.  Returns None when the
    iteration is not a contraction (G22 not stiff enough).
    """
    m = G.shape[0]
    G11, G12, G21, G22 = G[:q, :q], G[:q, q:], G[q:, :q], G[q:, q:]
    try:
        f22 = lu_factor(G22)
    except SingularMatrix:
        return None
    inv22 = np.max(np.sum(np.abs(f22.solve(np.eye(m - q, dtype=G.dtype))), axis=1))
    coupling = max(np.max(np.abs(B), initial=0.0) for B in (G11, G12, G21)) * m
    if inv22 * coupling > 0.25:
        return None
    X = _fixed_point(lambda X: f22.solve(X @ G11 + X @ G12 @ X - G21), -f22.solve(G21))
    if X is None:
        return None
    Gs = G11 + G12 @ X
    Gf = G22 - X @ G12
    try:
        ff = lu_factor(Gf.T)
    except SingularMatrix:
        return None
    Y = _fixed_point(lambda Y: ff.solve((Gs @ Y + G12).T).T, ff.solve(G12.T).T)
    if Y is None:
        return None
    eye_q, eye_r = np.eye(q), np.eye(m - q)
    zero_qr, zero_rq = np.zeros((q, m - q)), np.zeros((m - q, q))
    left = np.block([[eye_q, zero_qr], [X, eye_r]]) @ np.block([[eye_q, Y], [zero_rq, eye_r]])
    right = np.block([[eye_q, -Y], [zero_rq, eye_r]]) @ np.block([[eye_q, zero_qr], [-X, eye_r]])
    D = np.block([[expm(Gs, t), zero_qr], [zero_rq, expm(Gf, t)]])
    return left @ D @ right


def mode_propagator(system: RelaxationSystem, k: int, t: float, P=None) -> np.ndarray:
    """expm((-ikA + Q/eps) t), decoupled in the coordinates P U when P is given and the
    relaxation block is stiff enough."""
    G = mode_generator(system, k)
    if P is not None:
        P = np.asarray(P, dtype=float)
        Pinv = lu_factor(P).solve(np.eye(system.m))
        E = decoupled_expm(P @ G @ Pinv, system.m - system.r, t)
        if E is not None:
            return Pinv @ E @ P
    return expm(G, t)


def exact_evolve(system: RelaxationSystem, state: ModalState, t: float, P=None) -> ModalState:
    """Exact semigroup: each mode is multiplied by expm((-ikA + Q/eps) t).

    ``P`` is the similarity of a stability certificate (kernel rows of Q
    first); supplying it keeps the result accurate for tiny epsilon.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    if state.m != system.m:
        raise ShapeMismatch(f"state has {state.m} components, system has {system.m}")
    if t == 0:
        return ModalState(state.coeffs.copy())
    out = np.empty_like(state.coeffs)
    for k in range(state.N + 1):
        col = state.coeffs[:, k]
        if not np.any(col):
            out[:, k] = 0.0
            continue
        out[:, k] = mode_propagator(system, k, t, P) @ col
    return ModalState(out)
