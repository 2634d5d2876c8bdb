"""Convergence experiments over the relaxation-time range.

A study sweeps (scheme, epsilon, dt) cells.  For each epsilon the initial
data is first carried through the initial layer to ``T0``; every scheme
then integrates from that same state to ``T`` and is compared with a
reference evolved from it as well.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import CellFailure, DegenerateFit, EmptyTable, IoFailure, UnknownModel
from .relaxsys import RelaxationSystem, builtin
from .spectral import ModalState, modal_error, project
from .stepper import exact_evolve, integrate, plan, step_count
from .tableaux import registry

TABLE_HEADER = ["model", "scheme", "epsilon", "dt", "l2_error", "steps"]
FIT_HEADER = ["scheme", "epsilon", "slope", "residual"]
LAYER_SCHEME = "bhr553s"
LAYER_DT = 1e-5
LAYER_MODES = ("exact", "bhr")
_LAYER_ALIASES = {"paper": "bhr"}


def layer_mode(mode: str) -> str:
    """Canonical layer mode; ``paper`` is accepted as another name for ``bhr``."""
    key = _LAYER_ALIASES.get(mode, mode)
    if key not in LAYER_MODES:
        raise ValueError(f"layer must be one of {LAYER_MODES}, got {mode!r}")
    return key


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "broadwell"
    schemes: tuple[str, ...] = ("ars222", "ars443", "bhr553s")
    eps_lo: float = 1e-7
    eps_hi: float = 1.0
    eps_count: int = 15
    epsilons: tuple[float, ...] | None = None
    dt_base: float = 32.0
    dt_levels: int = 6
    dts: tuple[float, ...] | None = None
    N: int = 40
    T0: float = 1.0
    T: float = 2.0
    reference: str = "exact"
    layer: str = "exact"
    layer_dt: float = LAYER_DT
    fine_ratio: int = 64

    def __post_init__(self):
        if not self.T > self.T0 >= 0:
            raise ValueError(f"need T > T0 >= 0, got T0={self.T0}, T={self.T}")
        if self.reference not in ("exact", "fine"):
            raise ValueError(f"reference must be 'exact' or 'fine', got {self.reference!r}")
        object.__setattr__(self, "layer", layer_mode(self.layer))
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        if self.N < max_wavenumber(self.model):
            raise ValueError(f"N={self.N} cannot represent the {self.model} initial data")
        if self.epsilons is None and not (0 < self.eps_lo <= self.eps_hi and self.eps_count >= 1):
            raise ValueError("bad epsilon range")
        if self.dts is None and self.dt_levels < 1:
            raise ValueError("dt_levels must be >= 1")

    def epsilon_grid(self) -> list[float]:
        if self.epsilons is not None:
            return sorted(set(float(e) for e in self.epsilons))
        if self.eps_count == 1:
            return [float(self.eps_lo)]
        grid = np.logspace(math.log10(self.eps_lo), math.log10(self.eps_hi), self.eps_count)
        return sorted(set(float(e) for e in grid))

    def dt_ladder(self) -> list[float]:
        if self.dts is not None:
            return sorted(set(float(d) for d in self.dts), reverse=True)
        return [self.dt_base / self.N**2 * 2.0**-k for k in range(1, self.dt_levels + 1)]

    def scheme_list(self) -> list[str]:
        return list(dict.fromkeys(s.lower() for s in self.schemes))


@dataclass(frozen=True)
class ErrorRow:
    model: str
    scheme: str
    epsilon: float
    dt: float
    l2_error: float
    steps: int


@dataclass
class ErrorTable:
    rows: list[ErrorRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def schemes(self) -> list[str]:
        return list(dict.fromkeys(r.scheme for r in self.rows))

    def epsilons(self, scheme: str | None = None) -> list[float]:
        return sorted({r.epsilon for r in self.rows if scheme is None or r.scheme == scheme})

    def pairs(self, scheme: str, epsilon: float) -> list[tuple[float, float]]:
        return [(r.dt, r.l2_error) for r in self.rows if r.scheme == scheme and r.epsilon == epsilon]


@dataclass(frozen=True)
class UniformRow:
    model: str
    scheme: str
    dt: float
    l2_error: float


@dataclass(frozen=True)
class OrderFit:
    scheme: str
    epsilon: float | str
    slope: float
    residual: float


def max_wavenumber(model: str) -> int:
    key = model.strip().lower()
    if key == "broadwell":
        return 4
    if key == "grad" or key.startswith("grad:"):
        return 2
    raise UnknownModel(f"unknown model {model!r}")


def initial_state(model: str, N: int = 40) -> ModalState:
    """Projected initial data of the two built-in experiments."""
    key = model.strip().lower()
    if key == "broadwell":
        def rho(x):
            return 0.5 + 0.3 * np.sin(2 * x)

        return project([rho, lambda x: rho(x) * (0.5 + 0.05 * np.cos(2 * x)), lambda x: 0.5 * rho(x)], N)
    if key == "grad" or key.startswith("grad:"):
        sys, _ = builtin(key, 1.0)
        m = sys.m
        # (rho, w, theta/sqrt2, sqrt(3!) f3, ...) with theta = sqrt2 and f_k = 0
        comps: list[Callable] = [lambda x: np.sin(2 * x) + 1.1, lambda x: 0.0 * x, lambda x: 1.0 + 0.0 * x]
        comps += [lambda x: 0.0 * x] * (m - 3)
        return project(comps, N)
    raise UnknownModel(f"unknown model {model!r}")


def prepare_layer(system: RelaxationSystem, state: ModalState, T0: float, mode: str = "exact",
                  dt: float = LAYER_DT, P=None) -> ModalState:
    """Carry ``state`` to time T0 exactly or with BHR(5,5,3)* at a small step.

    ``P`` is forwarded to :func:`exact_evolve` in exact mode.
    """
    mode = layer_mode(mode)
    if T0 < 0:
        raise ValueError(f"T0 must be non-negative, got {T0}")
    if T0 == 0:
        return state
    if mode == "exact":
        return exact_evolve(system, state, T0, P)
    return integrate(plan(system, registry(LAYER_SCHEME), dt), state, T0)


def _reference(cfg: ExperimentConfig, system: RelaxationSystem, layered: ModalState, dts: Sequence[float], P):
    span = cfg.T - cfg.T0
    if cfg.reference == "exact":
        return exact_evolve(system, layered, span, P)
    fine = min(dts) / cfg.fine_ratio
    return integrate(plan(system, registry(LAYER_SCHEME), fine), layered, span)


def convergence_study(cfg: ExperimentConfig, progress: Callable[[str], None] | None = None) -> ErrorTable:
    """Run every (scheme, epsilon, dt) cell; rows ordered by scheme, epsilon ascending, dt descending."""
    schemes = cfg.scheme_list()
    tableaux = {name: registry(name) for name in schemes}
    eps_grid = cfg.epsilon_grid()
    dts = cfg.dt_ladder()
    span = cfg.T - cfg.T0
    u0 = initial_state(cfg.model, cfg.N)
    cells: dict[tuple[str, float, float], ErrorRow] = {}
    for eps in eps_grid:
        system, cert = builtin(cfg.model, eps)
        layered = prepare_layer(system, u0, cfg.T0, cfg.layer, cfg.layer_dt, cert.P)
        ref = _reference(cfg, system, layered, dts, cert.P)
        for name in schemes:
            for dt in dts:
                try:
                    n = step_count(dt, span)
                    approx = integrate(plan(system, tableaux[name], dt), layered, span)
                    err = modal_error(approx, ref)
                except Exception as exc:
                    raise CellFailure(name, eps, dt, exc) from exc
                if not math.isfinite(err):
                    raise CellFailure(name, eps, dt, "non-finite error")
                cells[(name, eps, dt)] = ErrorRow(cfg.model, name, eps, dt, err, n)
        if progress is not None:
            progress(f"epsilon={eps:.3e} done")
    rows = [cells[(name, eps, dt)] for name in schemes for eps in eps_grid for dt in dts]
    return ErrorTable(rows)


def uniform_error(table: ErrorTable | Iterable[ErrorRow]) -> list[UniformRow]:
    """Maximum error over epsilon for each (scheme, dt)."""
    rows = list(table)
    if not rows:
        raise EmptyTable("uniform error of an empty table")
    best: dict[tuple[str, str, float], float] = {}
    for r in rows:
        key = (r.model, r.scheme, r.dt)
        best[key] = max(best.get(key, -math.inf), r.l2_error)
    order = {s: i for i, s in enumerate(dict.fromkeys(r.scheme for r in rows))}
    keys = sorted(best, key=lambda k: (order[k[1]], k[0], -k[2]))
    return [UniformRow(m, s, dt, best[(m, s, dt)]) for m, s, dt in keys]


def fit_order(pairs: Iterable[tuple[float, float]], scheme: str = "", epsilon: float | str = "") -> OrderFit:
    """Least-squares slope of log(error) against log(dt).

    The residual is the root-mean-square deviation of the fit in natural log.
    """
    pts = [(float(dt), float(err)) for dt, err in pairs]
    if any(err <= 0 or not math.isfinite(err) for _, err in pts):
        raise DegenerateFit("errors must be positive and finite")
    if len(pts) < 2 or len({dt for dt, _ in pts}) < 2:
        raise DegenerateFit(f"need at least two distinct step sizes, got {len(pts)} pairs")
    x = np.log([dt for dt, _ in pts])
    y = np.log([err for _, err in pts])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return OrderFit(scheme, epsilon, float(slope), resid)


def order_fits(table: ErrorTable) -> list[OrderFit]:
    """Per-epsilon slopes for every scheme followed by the uniform (max over epsilon) slope."""
    fits: list[OrderFit] = []
    uni = uniform_error(table)
    for scheme in table.schemes():
        for eps in table.epsilons(scheme):
            fits.append(fit_order(table.pairs(scheme, eps), scheme, eps))
        fits.append(fit_order([(u.dt, u.l2_error) for u in uni if u.scheme == scheme], scheme, "uniform"))
    return fits


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(data, path, fits: bool | None = None) -> None:
    """Write an ErrorTable / ErrorRow list, or a list of OrderFit records.

    Floats carry 17 significant digits so a read back is bit-exact.  ``fits``
    picks the header for an empty input; otherwise it is inferred.
    """
    items = list(data)
    if fits is None:
        fits = bool(items) and isinstance(items[0], OrderFit)
    header = FIT_HEADER if fits else TABLE_HEADER
    try:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for it in items:
                w.writerow([_fmt(getattr(it, col)) for col in header])
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def read_csv(path) -> ErrorTable:
    try:
        with open(Path(path), newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != TABLE_HEADER:
                raise ValueError(f"unexpected header {reader.fieldnames}")
            rows = [
                ErrorRow(r["model"], r["scheme"], float(r["epsilon"]), float(r["dt"]),
                         float(r["l2_error"]), int(r["steps"]))
                for r in reader
            ]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return ErrorTable(rows)
