"""Double Butcher tableaux for IMEX Runge-Kutta schemes.

A tableau pairs a strictly lower-triangular explicit matrix ``Hexp`` (used
for the advection term) with a lower-triangular implicit matrix ``Himp``
(used for the stiff relaxation term) and their weight vectors.  This module
classifies tableaux (CK / ARS / ISA / GSA), evaluates the classical order
conditions up to third order, the stage-order and vanishing-coefficient
conditions needed for uniform third order, and checks user-supplied
energy certificates ``M``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .densemat import is_psd
from .errors import (
    IoFailure,
    NullityMismatch,
    ShapeMismatch,
    StructureViolation,
    TooFewStages,
    UnknownScheme,
)

STRUCTURE_TOL = 1e-14
CONDITION_TOL = 1e-12


@dataclass(frozen=True)
class Tableau:
    Hexp: np.ndarray
    Himp: np.ndarray
    bexp: np.ndarray
    bimp: np.ndarray
    name: str = ""
    order: int | None = None

    @property
    def s(self) -> int:
        return len(self.bimp)

    @property
    def cexp(self) -> np.ndarray:
        return self.Hexp.sum(axis=1)

    @property
    def cimp(self) -> np.ndarray:
        return self.Himp.sum(axis=1)

    def distinct_diagonal(self) -> list[float]:
        return sorted({float(h) for h in np.diag(self.Himp)})


def new_tableau(Hexp, Himp, bexp, bimp, name: str = "", order: int | None = None) -> Tableau:
    """Validate shapes and triangular structure and build a Tableau."""
    Hexp = np.array(Hexp, dtype=float)
    Himp = np.array(Himp, dtype=float)
    bexp = np.array(bexp, dtype=float).reshape(-1)
    bimp = np.array(bimp, dtype=float).reshape(-1)
    s = len(bimp)
    if s < 1:
        raise ShapeMismatch("a tableau needs at least one stage")
    for label, mat in (("Hexp", Hexp), ("Himp", Himp)):
        if mat.shape != (s, s):
            raise ShapeMismatch(f"{label} has shape {mat.shape}, expected {(s, s)}")
    if bexp.shape != (s,):
        raise ShapeMismatch(f"bexp has length {len(bexp)}, expected {s}")
    if not all(np.all(np.isfinite(x)) for x in (Hexp, Himp, bexp, bimp)):
        raise StructureViolation("non-finite tableau entry")
    upper_exp = np.max(np.abs(np.triu(Hexp)))
    if upper_exp > STRUCTURE_TOL:
        raise StructureViolation(f"Hexp is not strictly lower triangular (entry {upper_exp:.3e})")
    upper_imp = np.max(np.abs(np.triu(Himp, 1))) if s > 1 else 0.0
    if upper_imp > STRUCTURE_TOL:
        raise StructureViolation(f"Himp is not lower triangular (entry {upper_imp:.3e})")
    diag = np.diag(Himp)
    if np.any(diag < 0.0):
        raise StructureViolation(f"Himp has a negative diagonal entry {diag.min():g}")
    Hexp = np.tril(Hexp, -1)
    Himp = np.tril(Himp)
    for arr in (Hexp, Himp, bexp, bimp):
        arr.setflags(write=False)
    return Tableau(Hexp, Himp, bexp, bimp, name=name, order=order)


@dataclass(frozen=True)
class Classification:
    isCK: bool
    isARS: bool
    isISA: bool
    isGSA: bool
    cMatched: bool


def _block_invertible(block: np.ndarray) -> bool:
    if block.size == 0:
        return True
    scale = max(1.0, float(np.max(np.abs(block)))) ** block.shape[0]
    # lower triangular, so the determinant is the diagonal product
    return abs(float(np.prod(np.diag(block)))) > 1e-12 * scale


def classify(T: Tableau) -> Classification:
    H = T.Himp
    first_row_zero = bool(np.all(np.abs(H[0]) <= STRUCTURE_TOL))
    ck = first_row_zero and _block_invertible(H[1:, 1:])
    ars = ck and bool(np.all(np.abs(H[1:, 0]) <= STRUCTURE_TOL)) and bool(abs(T.bimp[0]) <= STRUCTURE_TOL)
    isa = bool(np.all(np.abs(H[-1] - T.bimp) <= STRUCTURE_TOL))
    gsa = isa and bool(np.all(np.abs(T.Hexp[-1] - T.bexp) <= STRUCTURE_TOL))
    matched = bool(np.all(np.abs(T.cimp - T.cexp) <= STRUCTURE_TOL))
    return Classification(ck, ars, isa, gsa, matched)


@dataclass
class ConditionReport:
    residuals: dict[str, float] = field(default_factory=dict)
    tol: float = CONDITION_TOL

    @property
    def passed(self) -> dict[str, bool]:
        return {k: v < self.tol for k, v in self.residuals.items()}

    @property
    def all_pass(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())

    def failures(self) -> list[str]:
        return [k for k, v in self.residuals.items() if not v < self.tol]

    def format(self) -> str:
        width = max((len(k) for k in self.residuals), default=0)
        return "\n".join(
            f"  {k:<{width}}  {v:.3e}  {'ok' if v < self.tol else 'FAIL'}"
            for k, v in self.residuals.items()
        )


def order_residuals(T: Tableau, p: int) -> ConditionReport:
    """Residuals of every order condition up to order ``p`` (1, 2 or 3).

    Names spell the sum: ``b``/``bt`` are the implicit/explicit weights,
    ``c``/``ct`` the abscissae, ``H``/``Ht`` the coefficient matrices.
    """
    if p not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2 or 3, got {p}")
    b, bt = T.bimp, T.bexp
    c, ct = T.cimp, T.cexp
    H, Ht = T.Himp, T.Hexp
    sums: list[tuple[str, float, float]] = [
        ("sum_bt = 1", bt.sum(), 1.0),
        ("sum_b = 1", b.sum(), 1.0),
    ]
    if p >= 2:
        sums += [
            ("sum_bt_ct = 1/2", bt @ ct, 0.5),
            ("sum_b_c = 1/2", b @ c, 0.5),
            ("sum_bt_c = 1/2", bt @ c, 0.5),
            ("sum_b_ct = 1/2", b @ ct, 0.5),
        ]
    if p >= 3:
        sixth, third = 1.0 / 6.0, 1.0 / 3.0
        sums += [
            ("sum_bt_Ht_ct = 1/6", bt @ Ht @ ct, sixth),
            ("sum_b_H_c = 1/6", b @ H @ c, sixth),
            ("sum_bt_ct_ct = 1/3", bt @ (ct * ct), third),
            ("sum_b_c_c = 1/3", b @ (c * c), third),
            ("sum_bt_Ht_c = 1/6", bt @ Ht @ c, sixth),
            ("sum_bt_H_ct = 1/6", bt @ H @ ct, sixth),
            ("sum_bt_H_c = 1/6", bt @ H @ c, sixth),
            ("sum_b_Ht_c = 1/6", b @ Ht @ c, sixth),
            ("sum_b_H_ct = 1/6", b @ H @ ct, sixth),
            ("sum_b_Ht_ct = 1/6", b @ Ht @ ct, sixth),
            ("sum_bt_c_c = 1/3", bt @ (c * c), third),
            ("sum_bt_ct_c = 1/3", bt @ (ct * c), third),
            ("sum_b_ct_ct = 1/3", b @ (ct * ct), third),
            ("sum_b_ct_c = 1/3", b @ (ct * c), third),
        ]
    return ConditionReport({name: abs(float(val) - target) for name, val, target in sums})


def stage_conditions(T: Tableau) -> ConditionReport:
    """Stage-order and vanishing-coefficient residuals (1-based stage labels).

    For i = 3..s: |c_i^2/2 - sum_j Ht_ij c_j| and |c_i^2/2 - sum_j H_ij c_j|,
    then |bt_2| and max_{i>=3} |H_i2|.
    """
    s = T.s
    if s < 3:
        raise TooFewStages(f"stage conditions need s >= 3, got {s}")
    c = T.cimp
    half_c2 = 0.5 * c * c
    ht_c = T.Hexp @ c
    h_c = T.Himp @ c
    res: dict[str, float] = {}
    for i in range(2, s):
        res[f"stage_explicit[{i + 1}]: sum_Ht_c = c^2/2"] = abs(half_c2[i] - ht_c[i])
        res[f"stage_implicit[{i + 1}]: sum_H_c = c^2/2"] = abs(half_c2[i] - h_c[i])
    res["vanishing: bt_2 = 0"] = abs(float(T.bexp[1]))
    res["vanishing: H_i2 = 0 (i>=3)"] = float(np.max(np.abs(T.Himp[2:, 1])))
    return ConditionReport(res)


def corner_matrix(s: int) -> np.ndarray:
    C = np.zeros((s, s))
    C[0, 0] = 1.0
    C[-1, -1] -= 1.0
    return C


def mstar(M) -> np.ndarray:
    """M·L + C where L has a zero first row, -1 below it in column one and
    the identity elsewhere, and C is +1 at the top-left / -1 at the bottom-right."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeMismatch(f"M must be square, got {M.shape}")
    s = M.shape[0]
    if s < 2:
        raise ShapeMismatch("M must be at least 2x2")
    L = np.eye(s)
    L[0, 0] = 0.0
    L[1:, 0] = -1.0
    return M @ L + corner_matrix(s)


@dataclass(frozen=True)
class MCertificate:
    M: np.ndarray
    tol: float = 1e-10


@dataclass(frozen=True)
class MCheck:
    m1_pass: bool
    m2_pass: bool
    m1_rank: int
    m2_rank: int
    m1_matrix: np.ndarray
    m2_matrix: np.ndarray


def check_M(T: Tableau, cert: MCertificate) -> tuple[bool, bool, MCheck]:
    M = np.asarray(cert.M, dtype=float)
    s = T.s
    if M.shape != (s, s):
        raise ShapeMismatch(f"M has shape {M.shape}, tableau has s={s}")
    MH = M @ T.Himp
    sym1 = MH + MH.T
    Ms = mstar(M)
    sym2 = Ms + Ms.T
    psd1, rank1 = is_psd(sym1, cert.tol)
    psd2, rank2 = is_psd(sym2, cert.tol)
    m1 = psd1 and rank1 == s - 1
    m2 = psd2 and rank2 == s - 1
    return m1, m2, MCheck(m1, m2, rank1, rank2, sym1, sym2)


def assumption_H(T: Tableau) -> tuple[bool, np.ndarray]:
    """Null-space generator of Himp and whether its last component vanishes."""
    H = T.Himp
    s = T.s
    nullity = s - int(np.linalg.matrix_rank(H, tol=1e-12 * max(1.0, float(np.max(np.abs(H))))))
    if nullity != 1:
        raise NullityMismatch(f"Himp has nullity {nullity}, expected 1")
    if not classify(T).isCK:
        raise NullityMismatch("assumption (H) is only defined for type CK tableaux")
    # H = [[0, 0], [h, Hhat]] with Hhat lower triangular: v = (1, -Hhat^{-1} h)
    v = np.zeros(s)
    v[0] = 1.0
    for i in range(1, s):
        v[i] = -(H[i, :i] @ v[:i]) / H[i, i]
    ok = abs(v[-1]) <= 1e-12 * np.linalg.norm(v)
    return bool(ok), v


# ---------------------------------------------------------------- registry


def _ars111() -> Tableau:
    return new_tableau(
        [[0, 0], [1, 0]], [[0, 0], [0, 1]], [1, 0], [0, 1], name="ARS(1,1,1)", order=1
    )


def _ars222() -> Tableau:
    g = 1.0 - np.sqrt(2.0) / 2.0
    d = 1.0 - 1.0 / (2.0 * g)
    return new_tableau(
        [[0, 0, 0], [g, 0, 0], [d, 1 - d, 0]],
        [[0, 0, 0], [0, g, 0], [0, 1 - g, g]],
        [d, 1 - d, 0],
        [0, 1 - g, g],
        name="ARS(2,2,2)",
        order=2,
    )


def _ars443() -> Tableau:
    return new_tableau(
        [
            [0, 0, 0, 0, 0],
            [1 / 2, 0, 0, 0, 0],
            [11 / 18, 1 / 18, 0, 0, 0],
            [5 / 6, -5 / 6, 1 / 2, 0, 0],
            [1 / 4, 7 / 4, 3 / 4, -7 / 4, 0],
        ],
        [
            [0, 0, 0, 0, 0],
            [0, 1 / 2, 0, 0, 0],
            [0, 1 / 6, 1 / 2, 0, 0],
            [0, -1 / 2, 1 / 2, 1 / 2, 0],
            [0, 3 / 2, -3 / 2, 1 / 2, 1 / 2],
        ],
        [1 / 4, 7 / 4, 3 / 4, -7 / 4, 0],
        [0, 3 / 2, -3 / 2, 1 / 2, 1 / 2],
        name="ARS(4,4,3)",
        order=3,
    )


def _bhr553s() -> Tableau:
    # Singly diagonally implicit with c = (0, 2g, 2g, c4, 1), c = ct, bt = b,
    # stage order two at stages 3..5 and Ht_32 = g, H_i2 = 0 (i >= 3).
    g = Fraction(424782, 974569)
    c4 = Fraction(2684624, 1147171)
    c3 = 2 * g
    # implicit weights from sum b c = 1/2 and sum b c^2 = 1/3 (b_2 = 0)
    det = c3 * c4 * c4 - c4 * c3 * c3
    r2 = Fraction(1, 2) - g
    r3 = Fraction(1, 3) - g
    b3 = (r2 * c4 * c4 - r3 * c4) / det
    b4 = (c3 * r3 - c3 * c3 * r2) / det
    b1 = 1 - g - b3 - b4
    h43 = (c4 * c4 / 2 - g * c4) / c3
    h41 = c4 - g - h43
    a43 = c4 * c4 / (2 * c3)
    a41 = c4 - a43
    # last explicit row: unit sum, sum a c = 1/2, sum a c^2 = 1/3 (a_52 = 0)
    m = np.array([[1.0, 1.0, 1.0], [0.0, float(c3), float(c4)], [0.0, float(c3 * c3), float(c4 * c4)]])
    a51, a53, a54 = np.linalg.solve(m, [1.0, 0.5, 1.0 / 3.0])
    gf = float(g)
    bimp = [float(b1), 0.0, float(b3), float(b4), gf]
    return new_tableau(
        [
            [0, 0, 0, 0, 0],
            [2 * gf, 0, 0, 0, 0],
            [gf, gf, 0, 0, 0],
            [float(a41), 0, float(a43), 0, 0],
            [a51, 0, a53, a54, 0],
        ],
        [
            [0, 0, 0, 0, 0],
            [gf, gf, 0, 0, 0],
            [gf, 0, gf, 0, 0],
            [float(h41), 0, float(h43), gf, 0],
            bimp,
        ],
        list(bimp),
        bimp,
        name="BHR(5,5,3)*",
        order=3,
    )


_REGISTRY = {
    "ars111": _ars111,
    "ars222": _ars222,
    "ars443": _ars443,
    "bhr553s": _bhr553s,
}


def scheme_names() -> list[str]:
    return list(_REGISTRY)


def registry(name: str) -> Tableau:
    try:
        build = _REGISTRY[name.lower()]
    except KeyError:
        raise UnknownScheme(f"unknown scheme {name!r}; known: {', '.join(_REGISTRY)}") from None
    T = build()
    report = order_residuals(T, T.order)
    if not report.all_pass:
        raise StructureViolation(f"{name} fails its order-{T.order} conditions: {report.failures()}")
    return T


# ---------------------------------------------------------------- file format


def _scalar(tok: str) -> float:
    try:
        return float(tok)
    except ValueError:
        return float(Fraction(tok))


def parse_tableau(text: str, name: str = "") -> Tableau:
    """Parse ``s``, s rows of Hexp, s rows of Himp, then bexp and bimp."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ShapeMismatch("empty tableau file")
    s = int(lines[0])
    if len(lines) != 1 + 2 * s + 2:
        raise ShapeMismatch(f"expected {1 + 2 * s + 2} non-empty lines for s={s}, found {len(lines)}")
    rows = [[_scalar(tok) for tok in ln.split()] for ln in lines[1:]]
    return new_tableau(rows[:s], rows[s:2 * s], rows[2 * s], rows[2 * s + 1], name=name)


def load_tableau(path) -> Tableau:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return parse_tableau(text, name=Path(path).name)


def format_tableau(T: Tableau) -> str:
    rows = [str(T.s)]
    rows += [" ".join(f"{v:.17g}" for v in r) for r in T.Hexp]
    rows += [" ".join(f"{v:.17g}" for v in r) for r in T.Himp]
    rows.append(" ".join(f"{v:.17g}" for v in T.bexp))
    rows.append(" ".join(f"{v:.17g}" for v in T.bimp))
    return "\n".join(rows) + "\n"
