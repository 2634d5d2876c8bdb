"""Fourier-Galerkin representation on the periodic interval [-pi, pi).

A :class:`ModalState` stores the coefficients of modes k = 0..N for every
component; negative modes follow from conjugate symmetry, so the fields
it represents are real.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import IoFailure, ShapeMismatch


@dataclass(frozen=True)
class ModalState:
    coeffs: np.ndarray  # shape (m, N + 1), complex

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[1] < 1:
            raise ShapeMismatch(f"coefficients must have shape (m, N+1), got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite modal coefficient")
        object.__setattr__(self, "coeffs", c)

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @property
    def N(self) -> int:
        return self.coeffs.shape[1] - 1

    @classmethod
    def zeros(cls, m: int, N: int) -> ModalState:
        return cls(np.zeros((m, N + 1), dtype=complex))

    def _check(self, other: ModalState) -> None:
        if self.coeffs.shape != other.coeffs.shape:
            raise ShapeMismatch(f"state shapes differ: {self.coeffs.shape} vs {other.coeffs.shape}")

    def __add__(self, other: ModalState) -> ModalState:
        self._check(other)
        return ModalState(self.coeffs + other.coeffs)

    def __sub__(self, other: ModalState) -> ModalState:
        self._check(other)
        return ModalState(self.coeffs - other.coeffs)

    def __mul__(self, alpha: float) -> ModalState:
        return ModalState(self.coeffs * alpha)

    __rmul__ = __mul__


@dataclass(frozen=True)
class GridField:
    x: np.ndarray
    values: np.ndarray  # shape (m, points)

    @property
    def m(self) -> int:
        return self.values.shape[0]


def grid(N: int, points: int | None = None) -> np.ndarray:
    """Equispaced nodes on [-pi, pi); defaults to 2N + 2 points."""
    n = 2 * N + 2 if points is None else points
    if n < 2 * N + 2 or n % 2:
        raise ValueError(f"need an even number of points >= {2 * N + 2}, got {n}")
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def _parseval_weights(N: int) -> np.ndarray:
    w = np.full(N + 1, 2.0)
    w[0] = 1.0
    return w


def project(f: Callable | Sequence[Callable], N: int, m: int | None = None) -> ModalState:
    """Trapezoid-rule Fourier coefficients of k = 0..N on 2N + 2 nodes.

    ``f`` is either a sequence of scalar functions (one per component) or a
    single callable returning an array of shape (m, len(x)).
    """
    x = grid(N)
    if callable(f):
        samples = np.atleast_2d(np.asarray(f(x), dtype=float))
    else:
        samples = np.array([np.broadcast_to(np.asarray(g(x), dtype=float), x.shape) for g in f])
    if m is not None and samples.shape[0] != m:
        raise ShapeMismatch(f"expected {m} components, got {samples.shape[0]}")
    k = np.arange(N + 1)
    basis = np.exp(-1j * np.outer(x, k)) / len(x)
    coeffs = samples @ basis
    coeffs[:, 0] = coeffs[:, 0].real
    return ModalState(coeffs)


def synthesize(state: ModalState, points: int | None = None) -> GridField:
    """Evaluate sum_{|k|<=N} u_k e^{ikx} on the grid."""
    x = grid(state.N, points)
    k = np.arange(state.N + 1)
    basis = np.exp(1j * np.outer(k, x)) * _parseval_weights(state.N)[:, None]
    vals = state.coeffs[:, :1].real + (state.coeffs[:, 1:] @ basis[1:]).real
    return GridField(x, vals)


def l2_norm(state: ModalState) -> float:
    """L2 norm over [-pi, pi) via Parseval."""
    return float(np.sqrt(2.0 * np.pi * np.sum(_parseval_weights(state.N) * np.abs(state.coeffs) ** 2)))


def weighted_norm(state: ModalState, W) -> float:
    """sqrt(int U^T W U dx) for a symmetric positive definite weight W."""
    W = np.asarray(W, dtype=float)
    if W.shape != (state.m, state.m):
        raise ShapeMismatch(f"weight must be {state.m}x{state.m}")
    c = state.coeffs
    quad = np.einsum("ik,ij,jk->k", c.conj(), W, c).real
    return float(np.sqrt(2.0 * np.pi * np.sum(_parseval_weights(state.N) * quad)))


def modal_error(a: ModalState, b: ModalState) -> float:
    a._check(b)
    return l2_norm(a - b)


def derivative(state: ModalState) -> ModalState:
    return ModalState(state.coeffs * (1j * np.arange(state.N + 1)))


def write_grid_csv(field: GridField, path) -> None:
    header = ["x"] + [f"comp{i + 1}" for i in range(field.m)]
    try:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for j, xj in enumerate(field.x):
                w.writerow([f"{xj:.17g}"] + [f"{v:.17g}" for v in field.values[:, j]])
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
