"""End-to-end acceptance criteria, each at its stated tolerance and time budget."""

import time

import numpy as np
import pytest

from chernlab import harness as H
from chernlab import linearization as L
from chernlab.cli import dumps, report_record

ZOO_ALL = tuple(H.ZOO)


def run(checks, manifolds=ZOO_ALL, **kwargs):
    start = time.perf_counter()
    reports = H.run_suite(H.SuiteConfig(manifolds=manifolds, checks=checks, **kwargs))
    return reports, time.perf_counter() - start


def summary(reports):
    failed = [f"{r.check}@{r.manifold} rel={r.max_rel_err:.2e} abs={r.max_abs_err:.2e}" for r in reports if not r.passed]
    oracle = [r for r in reports if r.mode == "rel" and r.check != "fd_error_model"] or reports
    worst = max(oracle, key=lambda r: r.max_rel_err)
    return failed, f"{len(reports)} reports, worst rel {worst.max_rel_err:.2e} ({worst.check}@{worst.manifold})"


def test_criterion_1_first_variation_oracle(criterion):
    reports, seconds = run(["fd_gamma", "fd_error_model"], samples=20)
    gamma = [r for r in reports if r.check == "fd_gamma"]
    failed, detail = summary(reports)
    ok = (
        not failed
        and len(gamma) == len(ZOO_ALL)
        and all(r.samples == 20 and r.tol == 1e-6 for r in gamma)
        and seconds < 60
    )
    assert criterion(1, "first-variation oracle, all zoo manifolds", ok, f"{detail}; {seconds:.1f}s"), failed


INTERMEDIATE = [
    "fd_connection",
    "fd_trace",
    "fd_curvature",
    "fd_ricci_form",
    "fd_lee",
    "fd_laplacian",
    "fd_ricci_endo",
    "fd_pairing",
]


def test_criterion_2_intermediate_variations(criterion):
    reports, seconds = run(INTERMEDIATE + ["dertrace"])
    failed, detail = summary(reports)
    tols_ok = all(r.tol == 1e-6 for r in reports if r.check in INTERMEDIATE)
    tols_ok &= all(r.tol == 1e-11 for r in reports if r.check == "dertrace")
    covered = {r.check for r in reports} == set(INTERMEDIATE + ["dertrace"])
    ok = not failed and tols_ok and covered
    assert criterion(2, "intermediate variation formulas and dertrace", ok, f"{detail}; {seconds:.1f}s"), failed


def test_criterion_3_second_variation(criterion):
    reports, seconds = run(["fd_second_var", "slin2_kahler", "second_var_closed_form"])
    failed, detail = summary(reports)
    by = {(r.check, r.manifold): r for r in reports}
    ok = (
        not failed
        and all(("fd_second_var", m) in by and by["fd_second_var", m].tol == 1e-4 for m in ZOO_ALL)
        and by["second_var_closed_form", "flat_torus1"].tol == 1e-5
        and all(r.tol == 1e-10 for r in reports if r.check == "slin2_kahler")
        and sum(r.check == "slin2_kahler" for r in reports) >= 5
    )
    assert criterion(3, "second variation vs FD, Kahler form, flat closed form", ok, detail), failed


def test_criterion_4_identities(criterion):
    checks = ["chern_laplacian", "ddc_kahler", "trace_ratio", "locscal", "ricci_logdet"]
    reports, seconds = run(checks)
    failed, detail = summary(reports)
    tol = {"chern_laplacian": 1e-10, "ddc_kahler": 1e-10, "trace_ratio": 1e-11, "locscal": 1e-11, "ricci_logdet": 1e-10}
    ok = not failed and all(r.tol <= tol[r.check] for r in reports) and {r.check for r in reports} == set(checks)
    assert criterion(4, "ChernLapl, ddcKahler, trace ratio, locscal, log-det Ricci", ok, detail), failed


def test_criterion_5_golden_values(criterion):
    hopf, _ = run(["golden_scal", "golden_lee", "golden_fce_hopf"], manifolds=("hopf",))
    cp1, _ = run(["golden_scal", "golden_fce_zero"], manifolds=("cp1",))
    reports = hopf + cp1
    failed, _ = summary(reports)
    by = {(r.check, r.manifold): r for r in reports}
    ok = (
        not failed
        and by["golden_scal", "hopf"].samples == 100
        and by["golden_scal", "hopf"].tol == 1e-10
        and by["golden_lee", "hopf"].tol == 1e-11
        and by["golden_fce_zero", "cp1"].tol == 1e-11
        and by["golden_fce_hopf", "hopf"].max_abs_err > 0.5
    )
    detail = (
        f"hopf scal err {by['golden_scal', 'hopf'].max_abs_err:.1e}, lee err {by['golden_lee', 'hopf'].max_abs_err:.1e}, "
        f"cp1 scal err {by['golden_scal', 'cp1'].max_abs_err:.1e}, hopf fce {by['golden_fce_hopf', 'hopf'].max_abs_err:.3f}"
    )
    assert criterion(5, "golden values on Hopf and CP1", ok, detail), failed


@pytest.mark.slow
def test_criterion_6_adjointness(criterion):
    reports, seconds = run(["adjointness"], manifolds=("flat_torus1", "cp1xcp1"))
    failed, _ = summary(reports)
    by = {r.manifold: r for r in reports}
    flat, prod = by["flat_torus1"], by["cp1xcp1"]
    ok = (
        not failed
        and flat.params["grid"] == 64
        and flat.params["pairs"] == 10
        and flat.max_rel_err <= 1e-8
        and prod.max_rel_err <= 1e-6
        and seconds < 120
    )
    detail = f"flat {flat.max_rel_err:.1e}, CP1xCP1 {prod.max_rel_err:.1e}; {seconds:.1f}s"
    assert criterion(6, "adjointness of gamma and gamma*", ok, detail), failed


@pytest.mark.slow
def test_criterion_7_instability_witness(criterion):
    checks = ["witness", "witness_control", "witness_rejects_non_kernel", "witness_doubling"]
    reports, seconds = run(checks, manifolds=("cp1xcp1",))
    failed, _ = summary(reports)
    by = {r.check: r for r in reports}
    w = by["witness"].params
    ok = (
        not failed
        and abs(w["lambda"] - 4.0) <= 1e-10
        and w["eigen_residual"] <= 1e-8
        and w["gamma_star_u"] <= 1e-8
        and w["gamma_h"] <= 1e-8
        and abs(w["value"] - L.WITNESS_VALUE) <= 1e-6 * L.WITNESS_VALUE
        and by["witness_doubling"].max_rel_err <= 1e-9
        and abs(by["witness_control"].params["value"]) <= 1e-8
        and seconds < 300
    )
    detail = (
        f"value {w['value']:.10f} vs 128pi^2/3 = {L.WITNESS_VALUE:.10f}, "
        f"doubling drift {by['witness_doubling'].max_rel_err:.1e}, control {by['witness_control'].params['value']:.1e}; "
        f"{seconds:.1f}s"
    )
    assert criterion(7, "CP1 x CP1 linearization-instability witness", ok, detail), failed


def test_criterion_8_stability_control(criterion):
    reports, _ = run(["stability_control"], manifolds=("flat_torus1", "flat_torus2"))
    failed, _ = summary(reports)
    ok = not failed and all(abs(r.params["value"]) <= 1e-10 for r in reports) and len(reports) == 2
    detail = ", ".join(f"{r.manifold} {r.params['value']:.1e}" for r in reports)
    assert criterion(8, "flat-torus obstruction with u = 1 vanishes", ok, detail), failed


def jsonl_without_time(reports):
    lines = []
    for rep in reports:
        record = report_record(rep)
        record.pop("seconds")
        lines.append(dumps(record))
    return ("\n".join(lines) + "\n").encode("utf-8")


def test_criterion_9_determinism(criterion):
    pointwise = [n for n, c in H.CHECKS.items() if not c.heavy and n != "adjointness" and "witness" not in n]

    def one_run():
        a = H.run_suite(H.SuiteConfig(checks=pointwise, seed=42))
        b = H.run_suite(
            H.SuiteConfig(
                manifolds=("flat_torus1", "cp1xcp1"),
                checks=["adjointness", "witness", "witness_control"],
                grids={"flat_torus1": 16, "cp1xcp1": 8},
                seed=42,
            )
        )
        return jsonl_without_time(a + b)

    first, second = one_run(), one_run()
    ok = first == second and len(first) > 0
    digest = f"{len(first.splitlines())} lines, {len(first)} bytes"
    assert criterion(9, "byte-identical JSONL for identical seed and config", ok, digest)
    assert np.all([b"\"seconds\"" not in line for line in first.splitlines()])
