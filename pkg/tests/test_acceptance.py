"""Acceptance criteria, one test each.

Every test records a single PASS/FAIL line; ``conftest.py`` prints them in
the terminal summary and ``python tests/test_acceptance.py`` prints them
directly.  The full-grid convergence runs take about a minute in total.
"""

import functools
import math
import subprocess
import sys

import numpy as np

from relaxlab.densemat import expm
from relaxlab.lab import ExperimentConfig, convergence_study, fit_order, initial_state, order_fits
from relaxlab.relaxsys import builtin, check_structural_stability
from relaxlab.spectral import ModalState, derivative, l2_norm, project, synthesize, weighted_norm
from relaxlab.stepper import exact_evolve, integrate, plan
from relaxlab.tableaux import classify, order_residuals, registry, scheme_names, stage_conditions

RESULTS: list[str] = []


def report(number: int, title: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title} ({detail})")
    assert ok, detail


def figure_config(model: str) -> ExperimentConfig:
    return ExperimentConfig(model=model, schemes=("ars222", "ars443", "bhr553s"), eps_lo=1e-7, eps_hi=1.0,
                            eps_count=15, dt_base=32.0, dt_levels=6, N=40, T0=1.0, T=2.0,
                            reference="exact", layer="bhr")


@functools.lru_cache(maxsize=None)
def slopes(model: str) -> dict:
    fits = order_fits(convergence_study(figure_config(model)))
    return {(f.scheme, f.epsilon): f.slope for f in fits}


def test_criterion_1_tableau_certification():
    T222, T443, Tbhr = registry("ars222"), registry("ars443"), registry("bhr553s")
    r222_low = order_residuals(T222, 2).residuals
    r222_3 = order_residuals(T222, 3).residuals
    third_only = {k: v for k, v in r222_3.items() if k not in r222_low}
    worst_443 = max(order_residuals(T443, 3).residuals.values())
    worst_bhr = max(order_residuals(Tbhr, 3).residuals.values())
    checks = [
        max(r222_low.values()) < 1e-12,
        max(third_only.values()) > 1e-3,
        worst_443 < 1e-12,
        worst_bhr < 1e-12,
        not stage_conditions(T443).all_pass,
        all(classify(T).isCK and classify(T).isISA for T in (T222, T443, Tbhr)),
    ]
    detail = (f"ars222 max p<=2 residual {max(r222_low.values()):.1e}, max 3rd {max(third_only.values()):.3g}; "
              f"ars443 {worst_443:.1e}; bhr553s {worst_bhr:.1e}; "
              f"ars443 stage/vanishing failures {len(stage_conditions(T443).failures())}")
    report(1, "tableau certification", all(checks), detail)


def test_criterion_2_structural_stability():
    ok = True
    worst = 0.0
    flipped_fail = True
    for model in ("broadwell", "grad:5"):
        sys_, cert = builtin(model, 1.0)
        rep = check_structural_stability(sys_.A, sys_.Q, cert, sys_.r)
        ok &= rep.all_pass
        worst = max(worst, max(rep.residuals.values()))
        for i in range(sys_.m):
            if sys_.Q[i, i] == 0.0:
                continue
            Q = sys_.Q.copy()
            Q[i, i] = -Q[i, i]
            flipped_fail &= not check_structural_stability(sys_.A, Q, cert, sys_.r).condIII
    report(2, "structural stability", ok and worst < 1e-10 and flipped_fail,
           f"all flags pass: {ok}, max residual {worst:.1e}, every flipped stiff sign fails condIII: {flipped_fail}")


def test_criterion_3_oracle_integrity():
    rng = np.random.default_rng(3)
    semi = inv = 0.0
    for _ in range(100):
        m = int(rng.integers(1, 7))
        A = rng.normal(size=(m, m))
        A /= max(1.0, np.linalg.norm(A, 2)) / rng.uniform(0.1, 1.0)
        t1, t2 = rng.uniform(0, 2, size=2)
        semi = max(semi, np.max(np.abs(expm(A, t1) @ expm(A, t2) - expm(A, t1 + t2))))
        inv = max(inv, np.max(np.abs(expm(A, t1) @ expm(A, -t1) - np.eye(m))))
    sys_, cert = builtin("broadwell", 1.0)
    u = initial_state("broadwell", 40)
    T = 1.0
    ref = exact_evolve(sys_, u, T, cert.P)
    fitted = {}
    for name in ("ars222", "bhr553s"):
        pairs = []
        for j in range(4, 9):
            dt = T / 2**j
            pairs.append((dt, l2_norm(integrate(plan(sys_, registry(name), dt), u, T) - ref)))
        fitted[name] = fit_order(pairs).slope
    ok = semi <= 1e-11 and inv <= 1e-11 and fitted["ars222"] >= 1.8 and fitted["bhr553s"] >= 2.6
    report(3, "oracle integrity", ok,
           f"semigroup {semi:.1e}, inverse {inv:.1e}, slopes ars222 {fitted['ars222']:.3f} "
           f"bhr553s {fitted['bhr553s']:.3f}")


def test_criterion_4_broadwell_uniform_accuracy():
    s = slopes("broadwell")
    a222, bhr = s[("ars222", "uniform")], s[("bhr553s", "uniform")]
    a443_1, a443_7, a443_u = s[("ars443", 1.0)], s[("ars443", min(e for _, e in s if e != "uniform"))], \
        s[("ars443", "uniform")]
    ok = (1.8 <= a222 <= 2.4 and 2.6 <= bhr <= 3.4 and a443_1 >= 2.6 and a443_7 >= 2.6
          and a443_u <= 2.6 and a443_1 - a443_u >= 0.3)
    report(4, "Broadwell uniform accuracy", ok,
           f"uniform ars222 {a222:.3f}, bhr553s {bhr:.3f}; ars443 eps=1 {a443_1:.3f}, "
           f"eps=1e-7 {a443_7:.3f}, uniform {a443_u:.3f}")


def test_criterion_5_grad_uniform_accuracy():
    s = slopes("grad:5")
    a222, bhr, a443 = s[("ars222", "uniform")], s[("bhr553s", "uniform")], s[("ars443", "uniform")]
    ok = 1.8 <= a222 <= 2.4 and 2.6 <= bhr <= 3.4 and a443 >= 1.8
    report(5, "Grad uniform accuracy", ok, f"uniform ars222 {a222:.3f}, bhr553s {bhr:.3f}, ars443 {a443:.3f}")


def test_criterion_6_energy_stability():
    N = 40
    dt = 1.0 / N**2
    worst = 0.0
    cases = 0
    for name in scheme_names():
        T = registry(name)
        if not classify(T).isISA:
            continue
        for model in ("broadwell", "grad:5"):
            u = initial_state(model, N)
            for eps in (1.0, 1e-3, 1e-7):
                sys_, cert = builtin(model, eps)
                out = integrate(plan(sys_, T, dt), u, 1000 * dt)
                worst = max(worst, weighted_norm(out, cert.A0) / weighted_norm(u, cert.A0))
                cases += 1
    report(6, "energy stability", worst <= 1.05, f"{cases} cases, max growth ratio {worst:.6f}")


def test_criterion_7_spectral_layer():
    rng = np.random.default_rng(7)
    worst_parseval = worst_round = worst_ratio = 0.0
    for _ in range(1000):
        N = int(rng.integers(0, 41))
        m = int(rng.integers(1, 5))
        c = np.zeros((m, N + 1), dtype=complex)
        deg = int(rng.integers(0, N + 1))
        c[:, : deg + 1] = rng.normal(size=(m, deg + 1)) + 1j * rng.normal(size=(m, deg + 1))
        c[:, 0] = c[:, 0].real
        u = ModalState(c)
        field = synthesize(u)
        quad = math.sqrt(2 * math.pi * np.mean(np.sum(field.values**2, axis=0)))
        scale = max(1.0, quad)
        worst_parseval = max(worst_parseval, abs(l2_norm(u) - quad) / scale)
        back = project(lambda x: field.values, N)
        worst_round = max(worst_round, np.max(np.abs(back.coeffs - c)) / max(1.0, np.max(np.abs(c))))
        if l2_norm(u) > 0 and N > 0:
            worst_ratio = max(worst_ratio, l2_norm(derivative(u)) / (N * l2_norm(u)))
    ok = worst_parseval <= 1e-12 and worst_round <= 1e-12 and worst_ratio <= 1.0 + 1e-14
    report(7, "spectral layer", ok,
           f"Parseval {worst_parseval:.1e}, round trip {worst_round:.1e}, max |u'|/(N|u|) {worst_ratio:.6f}")


def test_criterion_8_determinism(tmp_path):
    cmd = [sys.executable, "-m", "relaxlab", "converge", "--model", "broadwell",
           "--schemes", "ars222,ars443,bhr553s", "--eps-lo", "1e-7", "--eps-hi", "1", "--eps-count", "15",
           "--dt-base", "32", "--dt-levels", "6", "--n", "40", "--t0", "1", "--t", "2",
           "--ref", "exact", "--layer", "bhr"]
    paths = [tmp_path / "run1.csv", tmp_path / "run2.csv"]
    codes = [subprocess.run(cmd + ["--out", str(p)], capture_output=True).returncode for p in paths]
    same = all(c == 0 for c in codes) and paths[0].read_bytes() == paths[1].read_bytes()
    rows = len(paths[0].read_text().splitlines()) - 1 if paths[0].exists() else 0
    report(8, "determinism", same, f"exit codes {codes}, {rows} rows, byte-identical: {same}")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    failed = 0
    for t in tests:
        try:
            if "tmp_path" in t.__code__.co_varnames[: t.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    t(Path(d))
            else:
                t()
        except AssertionError:
            failed += 1
        print(RESULTS[-1], flush=True)
    sys.exit(1 if failed else 0)
