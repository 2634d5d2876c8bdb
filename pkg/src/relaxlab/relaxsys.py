"""Linear hyperbolic relaxation systems ``U_t + A U_x = Q U / epsilon``.

Systems carry their stiff-block rank ``r`` explicitly.  A
:class:`StabilityCertificate` (P, A0, Shat) witnesses the structural
stability conditions; :func:`check_structural_stability` verifies one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .densemat import is_psd, jacobi_eigh, lu_factor, lu_solve
from .errors import BadMomentOrder, ShapeMismatch, SingularMatrix, SingularP, UnknownModel

STABILITY_RTOL = 1e-10


@dataclass(frozen=True)
class RelaxationSystem:
    A: np.ndarray
    Q: np.ndarray
    r: int
    epsilon: float
    name: str = "custom"

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or Q.shape != A.shape:
            raise ShapeMismatch(f"A {A.shape} and Q {Q.shape} must be equal square shapes")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(Q))):
            raise ValueError("A and Q must be finite")
        if not 0 < self.r <= A.shape[0]:
            raise ValueError(f"stiff rank r={self.r} outside (0, {A.shape[0]}]")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "Q", Q)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def with_epsilon(self, epsilon: float) -> RelaxationSystem:
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True)
class StabilityCertificate:
    P: np.ndarray
    A0: np.ndarray
    Shat: np.ndarray

    @classmethod
    def from_transform(cls, P, A0, Q, r: int) -> StabilityCertificate:
        """Take Shat as the lower-right r x r block of P Q P^-1."""
        P = np.asarray(P, dtype=float)
        Qt = P @ np.asarray(Q, dtype=float) @ _inverse(P)
        return cls(P, np.asarray(A0, dtype=float), Qt[-r:, -r:].copy())


@dataclass
class StabilityReport:
    flags: dict[str, bool]
    residuals: dict[str, float]

    @property
    def all_pass(self) -> bool:
        return all(self.flags.values())

    def __getattr__(self, name):
        flags = self.__dict__.get("flags", {})
        if name in flags:
            return flags[name]
        raise AttributeError(name)

    def format(self) -> str:
        width = max(len(k) for k in self.flags)
        return "\n".join(
            f"  {k:<{width}}  {'ok' if self.flags[k] else 'FAIL':<4}  residual {self.residuals[k]:.3e}"
            for k in self.flags
        )


def _inverse(P: np.ndarray) -> np.ndarray:
    try:
        return lu_solve(P, np.eye(P.shape[0]))
    except SingularMatrix as exc:
        raise SingularP(str(exc)) from exc


def _stiff_projector(m: int, r: int) -> np.ndarray:
    E = np.zeros((m, m))
    E[m - r:, m - r:] = np.eye(r)
    return E


def check_structural_stability(A, Q, cert: StabilityCertificate, r: int) -> StabilityReport:
    """Verify conditions (i)-(iii), block-diagonality of the transformed
    symmetrizer and that A02·Shat is symmetric negative definite."""
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(cert.P, dtype=float)
    A0 = np.asarray(cert.A0, dtype=float)
    Shat = np.atleast_2d(np.asarray(cert.Shat, dtype=float))
    m = A.shape[0]
    if A.shape != (m, m) or Q.shape != (m, m) or P.shape != (m, m) or A0.shape != (m, m):
        raise ShapeMismatch("A, Q, P and A0 must all be m x m")
    if not 0 < r <= m or Shat.shape != (r, r):
        raise ShapeMismatch(f"Shat must be {r}x{r}, got {Shat.shape}")
    Pinv = _inverse(P)
    scale = max(1.0, *(float(np.max(np.abs(x))) for x in (A, Q, P, A0, Pinv)))
    tol = STABILITY_RTOL * scale
    flags: dict[str, bool] = {}
    res: dict[str, float] = {}

    block = np.zeros((m, m))
    block[m - r:, m - r:] = Shat
    res["condI"] = float(np.max(np.abs(P @ Q - block @ P)))
    try:
        lu_factor(Shat)
        shat_ok = True
    except SingularMatrix:
        shat_ok = False
    flags["condI"] = res["condI"] <= tol and shat_ok

    asym = float(np.max(np.abs(A0 - A0.T)))
    commute = float(np.max(np.abs(A0 @ A - A.T @ A0)))
    spd = False
    if asym <= tol:
        w, _ = jacobi_eigh(0.5 * (A0 + A0.T))
        spd = w[0] > tol
    res["condII"] = max(asym, commute)
    flags["condII"] = spd and res["condII"] <= tol

    X = A0 @ Q + Q.T @ A0 + P.T @ _stiff_projector(m, r) @ P
    Xs = 0.5 * (X + X.T)
    res["condIII"] = max(0.0, float(jacobi_eigh(Xs)[0][-1]))
    flags["condIII"] = is_psd(-Xs)[0] and float(np.max(np.abs(X - X.T))) <= tol

    A0t = Pinv.T @ A0 @ Pinv
    k = m - r
    off = max(float(np.max(np.abs(A0t[:k, k:]))) if k else 0.0, float(np.max(np.abs(A0t[k:, :k]))) if k else 0.0)
    res["blockDiagA0"] = off
    flags["blockDiagA0"] = off <= tol

    Y = A0t[k:, k:] @ Shat
    sym_res = float(np.max(np.abs(Y - Y.T)))
    top = float(jacobi_eigh(0.5 * (Y + Y.T))[0][-1])
    res["shatSymNegDef"] = max(sym_res, max(0.0, top))
    flags["shatSymNegDef"] = sym_res <= tol and top < -tol
    return StabilityReport(flags, res)


def transform(sys: RelaxationSystem, P) -> RelaxationSystem:
    """Change variables to P·U: A -> P A P^-1, Q -> P Q P^-1."""
    P = np.asarray(P, dtype=float)
    if P.shape != (sys.m, sys.m):
        raise ShapeMismatch(f"P must be {sys.m}x{sys.m}")
    Pinv = _inverse(P)
    return replace(sys, A=P @ sys.A @ Pinv, Q=P @ sys.Q @ Pinv)


def derive_certificate(A, Q, r: int, tol: float = 1e-10) -> StabilityCertificate:
    """Build (P, A0) for a system whose Q is diagonalizable with real
    eigenvalues and a semisimple zero eigenvalue of multiplicity m - r.

    P stacks left eigenvectors of Q (kernel first).  A0 is the symmetrizer
    closest to the identity among those that are block diagonal in the
    P-coordinates, scaled so that the coupling condition holds with margin.
    """
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    m = A.shape[0]
    lam, vecs = np.linalg.eig(Q.T)
    if np.max(np.abs(lam.imag)) > tol or np.max(np.abs(vecs.imag)) > tol:
        raise ValueError("Q must have real eigenvalues and eigenvectors")
    lam, vecs = lam.real, vecs.real
    qscale = max(1.0, float(np.max(np.abs(Q))))
    kernel = np.abs(lam) <= tol * qscale
    if int(np.sum(~kernel)) != r:
        raise ValueError(f"Q has {int(np.sum(~kernel))} nonzero eigenvalues, expected r={r}")
    order = np.concatenate([np.flatnonzero(kernel), np.flatnonzero(~kernel)])
    P = vecs[:, order].T.copy()
    P /= np.max(np.abs(P), axis=1, keepdims=True)
    Pinv = _inverse(P)
    At = P @ A @ Pinv
    Shat = (P @ Q @ Pinv)[m - r:, m - r:]

    # basis of symmetric block-diagonal matrices
    k = m - r
    basis = []
    for lo, hi in ((0, k), (k, m)):
        for i in range(lo, hi):
            for j in range(i, hi):
                E = np.zeros((m, m))
                E[i, j] = E[j, i] = 1.0
                basis.append(E)
    cons = np.array([(E @ At - At.T @ E).ravel() for E in basis]).T
    _, sv, vt = np.linalg.svd(cons)
    rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0] if len(sv) else 0.0)))
    null = vt[rank:]
    if len(null) == 0:
        raise ValueError("no block-diagonal symmetrizer exists")
    mats = [sum(coef * E for coef, E in zip(vec, basis)) for vec in null]
    gram = np.array([[np.sum(Mi * Mj) for Mj in mats] for Mi in mats])
    rhs = np.array([np.trace(Mi) for Mi in mats])
    coef = np.linalg.solve(gram, rhs)
    A0t = sum(c * Mi for c, Mi in zip(coef, mats))
    if jacobi_eigh(A0t)[0][0] <= tol:
        raise ValueError("closest block-diagonal symmetrizer is not positive definite")

    Y = A0t[k:, k:] @ Shat
    decay = jacobi_eigh(-(Y + Y.T) / 1.0)[0][0]
    if decay <= tol:
        raise ValueError("relaxation block is not dissipative under the symmetrizer")
    A0t = A0t * (2.0 / decay)
    A0 = P.T @ A0t @ P
    return StabilityCertificate(P, 0.5 * (A0 + A0.T), Shat)


BROADWELL_A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
BROADWELL_Q = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, -2.0]])


def builtin_broadwell(epsilon: float) -> tuple[RelaxationSystem, StabilityCertificate]:
    """Broadwell model linearized at rho = 2, m = 0, z = 1; state (rho, m, z)."""
    sys = RelaxationSystem(BROADWELL_A.copy(), BROADWELL_Q.copy(), 1, epsilon, name="broadwell")
    return sys, derive_certificate(sys.A, sys.Q, sys.r)


def grad_matrices(M: int) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(M, (int, np.integer)) or M < 3:
        raise BadMomentOrder(f"moment order must be an integer >= 3, got {M!r}")
    off = np.sqrt(np.arange(1, M + 1, dtype=float))
    A = np.diag(off, 1) + np.diag(off, -1)
    Q = -np.diag([0.0, 0.0, 0.0] + [1.0] * (M - 2))
    return A, Q


def builtin_grad(M: int, epsilon: float) -> tuple[RelaxationSystem, StabilityCertificate]:
    """Linearized 1-D Grad moment system of order M (state dimension M + 1)."""
    A, Q = grad_matrices(M)
    r = M - 2
    sys = RelaxationSystem(A, Q, r, epsilon, name=f"grad:{M}")
    m = M + 1
    return sys, StabilityCertificate(np.eye(m), np.eye(m), -np.eye(r))


def builtin(model: str, epsilon: float) -> tuple[RelaxationSystem, StabilityCertificate]:
    """Resolve ``broadwell`` or ``grad:M`` (``grad`` alone means M = 5)."""
    key = model.strip().lower()
    if key == "broadwell":
        return builtin_broadwell(epsilon)
    if key == "grad" or key.startswith("grad:"):
        _, _, order = key.partition(":")
        try:
            M = int(order) if order else 5
        except ValueError:
            raise BadMomentOrder(f"bad moment order in {model!r}") from None
        return builtin_grad(M, epsilon)
    raise UnknownModel(f"unknown model {model!r}; expected 'broadwell' or 'grad:M'")
