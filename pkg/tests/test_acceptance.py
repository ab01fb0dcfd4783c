"""Acceptance criteria, one test each, at the stated tolerances and runtimes.

Every test prints a single ``CRITERION n [PASS|FAIL] ...`` line; the same
lines are repeated in the terminal summary.
"""
import time

import numpy as np
import pytest

from cpmodules import verification as V
from cpmodules.instances import equivalent_pair_4x2, equivalent_pair_5x2
from cpmodules.modules import is_partial_isometry

SEED = 42
RESULTS = {}


def _report(number, title, result, extra=""):
    status = "PASS" if result.passed else "FAIL"
    line = (f"CRITERION {number:>2} [{status}] {title:<38} max residual {result.max_residual:.3e} "
            f"({result.wall_time:.2f} s){extra}")
    if not result.passed:
        line += "  failures: " + "; ".join(result.details.get("failures", [result.details.get("error", "")]))
    RESULTS[number] = line
    print(line)
    return result


@pytest.fixture(scope="module")
def population():
    t0 = time.perf_counter()
    pop = V._order_population(SEED, 50, V.la.DEFAULT_TOL)
    return pop, time.perf_counter() - t0


def test_criterion_01_degenerate_worked_example():
    res = _report(1, "worked example M_2 -> M_5x2", V.check_example_5x2())
    inst = equivalent_pair_5x2()
    assert res.details["residuals"]["phi_map(Phi)"] <= 1e-10
    assert res.details["residuals"]["phi_map(Psi)"] <= 1e-10
    assert res.details["residuals"]["equivalent"] is True
    for key in ("partial_isometry", "range_Phi", "range_Psi", "Phi_equals_V_Psi"):
        assert res.details["residuals"][f"constructed_V.{key}"] <= 1e-10
    assert res.wall_time < 1.0
    # the stored matrix must itself be a partial isometry
    assert is_partial_isometry(inst.operators["V_reference"], 1e-10)
    for key, value in res.details["reference_V_residuals"].items():
        assert value <= 1e-10, key
    assert res.passed


def test_criterion_02_nondegenerate_worked_example():
    res = _report(2, "worked example M_2 -> M_4x2", V.check_example_4x2())
    inst = equivalent_pair_4x2()
    assert is_partial_isometry(inst.operators["V_reference"], 1e-10)
    ev = np.sort(res.details["choi_eigenvalues"])[::-1]
    assert np.abs(ev - [4, 2, 0, 0]).max() <= 1e-10
    assert res.details["residuals"]["phi(I)=diag(3,3)"] <= 1e-10
    assert res.wall_time < 1.0
    assert res.passed


def test_criterion_03_commutant_round_trip():
    res = _report(3, "T -> phi_T round trip (50 maps)", V.check_commutant_correspondence(SEED, 50))
    r = res.details["residuals"]
    assert r["recover_T(phi_T(T)) - T"] <= 1e-8
    assert r["affinity"] <= 1e-10
    assert r["injectivity"] is True
    assert res.wall_time < 30.0
    assert res.passed


def test_criterion_04_rn_derivative(population):
    pop, build = population
    res = V.check_rn_derivative(SEED, 50, population=pop)
    res.wall_time += build
    _report(4, "Radon-Nikodym derivative (50 pairs)", res)
    r = res.details["residuals"]
    assert r["commutant_intertwining"] <= 1e-8
    assert r["norm_excess"] <= 1e-9
    assert r["equivalence_to_Phi_sqrt_delta"] <= 1e-8
    assert r["delta - (T+S)"] <= 1e-8
    assert res.wall_time < 60.0
    assert res.passed


def test_criterion_05_reconstruction(population):
    pop, _ = population
    res = _report(5, "Stinespring reconstruction", V.check_reconstruction(SEED, 50, population=pop))
    r = res.details["residuals"]
    for label in ("Phi", "Psi"):
        assert r[f"{label}.phi(a)=V*pi(a)V"] <= 1e-10
        assert r[f"{label}.Phi(x)=W*pi(x)xi"] <= 1e-10
        assert r[f"{label}.coisometry"] <= 1e-10
        assert r[f"{label}.minimal"] is True
    assert res.passed


def test_criterion_06_cp_oracle():
    res = _report(6, "Choi vs operational CP (100 maps)", V.check_cp_oracle(SEED, 50))
    assert res.details["maps"] == 100
    assert res.details["disagreements"] == 0
    assert res.passed


def test_criterion_07_positive_decomposition():
    res = _report(7, "positive decomposition (50 elements)", V.check_positive_decomposition(SEED, 50))
    assert res.details["residuals"]["reconstruction"] <= 1e-10
    assert res.passed


def test_criterion_08_reduced_construction():
    res = _report(8, "reduced construction (20 instances)", V.check_reduced_construction(SEED, 20))
    r = res.details["residuals"]
    assert r["minimal"] is True
    assert r["coisometry"] <= 1e-10
    assert r["equivalent_to_Psi"] <= 1e-8
    assert r["range_projection_identity"] <= 1e-8
    assert res.details["strictly_smaller"] == 20
    assert res.passed


def test_criterion_09_purity():
    res = _report(9, "purity", V.check_purity(SEED, 50))
    r = res.details["residuals"]
    assert r["identity_is_pure"] is True and r["doubled_is_not_pure"] is True
    assert r["pure: delta - lambda I"] <= 1e-8
    assert all(-1e-8 <= lam <= 1 + 1e-8 for lam in res.details["lambdas"])
    assert res.passed


def test_criterion_10_preorder():
    res = _report(10, "pre-order (50 instances)", V.check_preorder(SEED, 50))
    r = res.details["residuals"]
    assert r["reflexive"] is True and r["transitive"] is True
    assert r["antisymmetric_pair_ordered"] is True
    assert r["antisymmetry_equivalence"] <= 1e-8
    assert res.passed
