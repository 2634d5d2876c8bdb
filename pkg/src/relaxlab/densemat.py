"""Small dense matrix kernels.

Everything here targets the tiny systems of this package (m and s at most
around ten), so the algorithms favour robustness over asymptotic speed:
LU with partial pivoting, cyclic Jacobi for symmetric eigenvalues and a
scaling-and-squaring Taylor exponential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IoFailure, NotSymmetric, Overflow, ShapeMismatch, SingularMatrix

PIVOT_FLOOR = 1e-300
SYMMETRY_RTOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class EigenReport:
    eigenvalues: np.ndarray
    positive_rank: int
    negative_count: int

    @property
    def dimension(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class LUFactors:
    """Packed LU factors (unit lower L below the diagonal, U on and above) and row permutation."""

    lu: np.ndarray
    perm: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def solve(self, b):
        return lu_solve_factored(self, b)

    def reconstruct(self) -> np.ndarray:
        n = self.n
        lower = np.tril(self.lu, -1) + np.eye(n)
        upper = np.triu(self.lu)
        pa = lower @ upper
        out = np.empty_like(pa)
        out[self.perm] = pa
        return out


def _square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def lu_factor(a) -> LUFactors:
    """Factor ``a`` as P·a = L·U with partial pivoting."""
    a = np.array(a, dtype=np.result_type(np.asarray(a).dtype, np.float64))
    _square(a)
    n = a.shape[0]
    perm = np.arange(n)
    for j in range(n):
        p = j + int(np.argmax(np.abs(a[j:, j])))
        if abs(a[p, j]) < PIVOT_FLOOR:
            raise SingularMatrix(f"pivot {abs(a[p, j]):.3e} in column {j}")
        if p != j:
            a[[j, p]] = a[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        a[j + 1:, j] /= a[j, j]
        a[j + 1:, j + 1:] -= np.outer(a[j + 1:, j], a[j, j + 1:])
    return LUFactors(a, perm)


def lu_solve_factored(factors: LUFactors, b):
    """Solve with precomputed factors; ``b`` may be a vector or have one column per right-hand side."""
    b = np.asarray(b)
    n = factors.n
    if b.shape[0] != n:
        raise ShapeMismatch(f"right-hand side has {b.shape[0]} rows, matrix is {n}x{n}")
    lu = factors.lu
    x = np.array(b[factors.perm], dtype=np.result_type(lu.dtype, b.dtype))
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] -= lu[i, i + 1:] @ x[i + 1:]
        x[i] /= lu[i, i]
    return x


def lu_solve(a, b):
    """Solve ``a x = b`` by LU with partial pivoting.

    Raises SingularMatrix when a pivot falls below 1e-300 in magnitude.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    _square(a)
    if b.shape[0] != a.shape[0]:
        raise ShapeMismatch(f"right-hand side length {b.shape[0]} does not match {a.shape}")
    return lu_solve_factored(lu_factor(a), b)


def check_symmetric(s, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    _square(s)
    scale = np.max(np.abs(s)) if s.size else 0.0
    asym = np.max(np.abs(s - s.T)) if s.size else 0.0
    if asym > rtol * max(scale, 1e-300) and asym > 0.0:
        raise NotSymmetric(f"asymmetry {asym:.3e} exceeds {rtol:g} relative to {scale:.3e}")
    return 0.5 * (s + s.T)


def jacobi_eigh(s, max_sweeps: int = 100):
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Returns ascending eigenvalues and the matching orthonormal eigenvectors
    (as columns).
    """
    a = check_symmetric(s).copy()
    n = a.shape[0]
    v = np.eye(n)
    if n <= 1:
        return np.diag(a).copy(), v
    frob = np.linalg.norm(a)
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a[offmask]))
        if off <= 1e-15 * frob or off == 0.0:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(apq) < 1e-150 * abs(diff):
                    t = apq / diff  # theta would overflow; tan of the tiny angle
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rot = np.array([[c, sn], [-sn, c]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def sym_eigen(s, tol: float = PSD_TOL) -> EigenReport:
    """Eigenvalues of a symmetric matrix plus rank/inertia counts at ``tol`` relative to its norm."""
    w, _ = jacobi_eigh(s)
    scale = float(np.max(np.abs(w))) if len(w) else 0.0
    thresh = tol * scale if scale > 0.0 else tol
    return EigenReport(w, int(np.sum(w > thresh)), int(np.sum(w < -thresh)))


def is_psd(s, tol: float = PSD_TOL) -> tuple[bool, int]:
    """Positive-semidefiniteness flag and positive rank.

    The tolerance is relative to the spectral norm; the zero matrix falls
    back to the absolute tolerance so it reports (True, 0).
    """
    w, _ = jacobi_eigh(s)
    scale = float(np.max(np.abs(w))) if len(w) else 0.0
    thresh = tol * scale if scale > 0.0 else tol
    return bool(len(w) == 0 or w[0] >= -thresh), int(np.sum(w > thresh))


def expm(a, t: float = 1.0) -> np.ndarray:
    """exp(t·a) by scaling and squaring around a truncated Taylor series."""
    a = np.asarray(a)
    _square(a)
    n = a.shape[0]
    x = np.asarray(t * a, dtype=np.result_type(a.dtype, np.float64))
    if not np.all(np.isfinite(x)):
        raise Overflow("non-finite entries in t*A")
    norm = float(np.max(np.sum(np.abs(x), axis=0))) if n else 0.0
    squarings = 0
    if norm > 0.5:
        squarings = int(math.ceil(math.log2(norm / 0.5)))
        x = x / 2.0 ** squarings
    result = np.eye(n, dtype=x.dtype)
    term = np.eye(n, dtype=x.dtype)
    for k in range(1, 200):
        term = term @ x / k
        result = result + term
        if np.max(np.abs(term)) < 1e-18:
            break
    for _ in range(squarings):
        with np.errstate(over="ignore", invalid="ignore"):
            result = result @ result
        if not np.all(np.isfinite(result)):
            raise Overflow("matrix exponential overflowed during squaring")
    return result


def read_matrix(path) -> np.ndarray:
    """Read the plain-text format: ``rows cols`` then one line per row."""
    try:
        lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if not lines:
        raise ShapeMismatch(f"{path}: empty matrix file")
    rows, cols = (int(tok) for tok in lines[0].split())
    body = lines[1:]
    if len(body) != rows:
        raise ShapeMismatch(f"{path}: expected {rows} rows, found {len(body)}")
    parsed = [[float(tok) for tok in ln.split()] for ln in body]
    bad = [i for i, row in enumerate(parsed) if len(row) != cols]
    if bad:
        raise ShapeMismatch(f"{path}: row {bad[0] + 1} has {len(parsed[bad[0]])} entries, expected {cols}")
    data = np.array(parsed, dtype=float).reshape(rows, cols)
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{path}: non-finite entries")
    return data


def write_matrix(path, a) -> None:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ShapeMismatch("only 2-D real matrices can be written")
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines += [" ".join(f"{v:.17g}" for v in row) for row in a]
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
