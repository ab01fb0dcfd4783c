import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from cpmodules.algebra import BlockAlgebra
from cpmodules.cpmaps import (
    PhiMap,
    cp_order_leq,
    equivalence_check,
    from_kraus,
    identity_map,
    induced_phi,
    phi_map_check,
    zero_map,
)
from cpmodules.dilation import OperatorFamily, module_stinespring, stinespring
from cpmodules.exceptions import CommutantError, NotEquivalentError, NotPositiveError, OrderError
from cpmodules.modules import ModuleOperator, ModuleShape, is_partial_isometry
from cpmodules.radon_nikodym import (
    CommutantElement,
    algebra_commutant,
    algebra_commutant_residual,
    contraction_J,
    contraction_residuals,
    equivalent_partial_isometry,
    is_pure,
    module_commutant,
    module_commutant_residual,
    order_iso_check,
    partial_isometry_conditions,
    phi_T,
    phi_TS,
    positive_contraction_parts,
    recover_T,
    reduced_stinespring,
    rn_derivative,
    sample_positive_contraction,
    sample_rank_deficient,
    t2_nullity,
)
from cpmodules.random_instances import cgauss, kraus_phi_map, random_algebra, random_kraus, random_phi_map

seeds = st.integers(0, 2**32 - 1)
M2 = BlockAlgebra((2,))


def _random_S(rng):
    A, B = random_algebra(rng), random_algebra(rng)
    return stinespring(from_kraus(A, B, random_kraus(rng, A, B)))


def _rich_instance(rng):
    """A random phi-map whose module commutant is at least two-dimensional."""
    while True:
        Phi = random_phi_map(rng)
        M = module_stinespring(Phi)
        C = module_commutant(M)
        if C.dim >= 2:
            return Phi, M, C


def _colmajor_commutant_dim(images):
    # independent oracle: vec_col(P X - X P) = (I (x) P - P^T (x) I) vec_col(X)
    m = images[0].shape[0]
    eye = np.eye(m)
    rows = np.vstack([np.kron(eye, P) - np.kron(P.T, eye) for P in images])
    return scipy.linalg.null_space(rows, rcond=1e-10).shape[1]


def _identity_phi(dims):
    A = BlockAlgebra(tuple(dims))
    return kraus_phi_map(ModuleShape(A, tuple(dims)), A, {(j, j): [np.eye(n)] for j, n in enumerate(dims)})


# commutants

def test_algebra_commutant_of_identity_rep():
    S = stinespring(identity_map(M2))
    C = algebra_commutant(S.pi)
    assert C.dim == 1


def test_algebra_commutant_of_doubled_rep():
    K = ModuleShape(BlockAlgebra((1,)), (4,))
    images = np.array([np.kron(np.eye(2), M2.matrix_unit(0, r, s).blocks[0]) for (_, r, s) in M2.basis_labels])
    C = algebra_commutant(OperatorFamily(K, K, (images,)))
    assert C.dim == 4 == _colmajor_commutant_dim(list(images))
    assert C.closure_residual() <= 1e-8


def test_algebra_commutant_matches_oracle(pair_5x2):
    rng = np.random.default_rng(5)
    for S in [stinespring(pair_5x2.maps["phi"])] + [_random_S(rng) for _ in range(20)]:
        C = algebra_commutant(S.pi)
        want = sum(_colmajor_commutant_dim(list(im)) for im, m in zip(S.pi.images, S.K.heights) if m)
        assert C.dim == want
        for (T,) in C.elements:
            assert algebra_commutant_residual(S, T) <= 1e-10


def test_module_commutant_examples(pair_4x2):
    E = ModuleShape(M2, (2,))
    M = module_stinespring(PhiMap(E, E, np.eye(E.dim), identity_map(M2)))
    C = module_commutant(M)
    I = CommutantElement.identity(M)
    assert C.projection_residual((I.T1, I.T2)) <= 1e-10
    M = module_stinespring(pair_4x2.maps["Psi"])
    assert t2_nullity(M) == 0


@given(seeds)
def test_module_commutant_properties(seed):
    rng = np.random.default_rng(seed)
    M = module_stinespring(random_phi_map(rng))
    C = module_commutant(M)
    for TS in C.pairs():
        assert module_commutant_residual(M, TS) <= 1e-10
        # the first component commutes with pi_phi
        assert algebra_commutant_residual(M.S, TS.T1) <= 1e-8
    assert C.closure_residual() <= 1e-8
    assert t2_nullity(M) == 0


# J, phi_T and recover_T

def test_contraction_J_examples(rng):
    S = _random_S(rng)
    phi = S.phi
    J = contraction_J(phi, phi, S, S)
    assert (J.adjoint() @ J).distance(S.K.identity()) <= 1e-10
    half = 0.5 * phi
    J = contraction_J(phi, half, S)
    assert (J.adjoint() @ J).distance(0.5 * S.K.identity()) <= 1e-10
    with pytest.raises(OrderError):
        contraction_J(half, phi)


@given(seeds)
def test_contraction_J_properties(seed):
    rng = np.random.default_rng(seed)
    S = _random_S(rng)
    T = positive_contraction_parts(algebra_commutant(S.pi), rng)[0]
    psi = phi_T(S, T)
    S_psi = stinespring(psi)
    J = contraction_J(S.phi, psi, S, S_psi)
    res = contraction_residuals(J, S, S_psi)
    assert res["dilation"] <= 1e-8 and res["intertwining"] <= 1e-8
    assert res["norm"] <= 1 + 1e-9
    assert (J.adjoint() @ J).distance(T) <= 1e-8


def test_phi_T_examples(rng):
    S = _random_S(rng)
    assert phi_T(S, S.K.identity()).distance(S.phi) <= 1e-10
    assert phi_T(S, S.K.zero_operator()).scale() == 0.0
    assert phi_T(S, 0.5 * S.K.identity()).distance(0.5 * S.phi) <= 1e-10


def test_phi_T_rejects_non_commuting(rng):
    S = stinespring(identity_map(M2))
    junk = ModuleOperator(S.K, S.K, tuple(cgauss(rng, (m, m)) for m in S.K.heights))
    with pytest.raises(CommutantError):
        phi_T(S, junk)


def test_recover_T_examples(rng):
    S = _random_S(rng)
    assert recover_T(S, S.phi).distance(S.K.identity()) <= 1e-8
    assert recover_T(S, zero_map(S.phi.domain, S.phi.codomain)).norm() <= 1e-12


@given(seeds)
def test_phi_T_round_trip_affinity_and_order(seed):
    rng = np.random.default_rng(seed)
    S = _random_S(rng)
    C = algebra_commutant(S.pi)
    a = positive_contraction_parts(C, rng)[0]
    b = positive_contraction_parts(C, rng)[0]
    assert recover_T(S, phi_T(S, a)).distance(a) <= 1e-8
    lam = rng.uniform()
    mix = phi_T(S, lam * a + (1 - lam) * b)
    assert mix.distance(lam * phi_T(S, a) + (1 - lam) * phi_T(S, b)) <= 1e-10
    lo, hi = 0.5 * a, 0.5 * a + 0.5 * b
    p_lo, p_hi = phi_T(S, lo), phi_T(S, hi)
    assert cp_order_leq(p_lo, p_hi) and cp_order_leq(p_hi, S.phi)
    gap = recover_T(S, p_hi) - recover_T(S, p_lo)
    assert min(np.linalg.eigvalsh((g + g.conj().T) / 2).min() for g in gap.blocks if g.shape[0]) >= -1e-8


# phi_TS and the derivative

def test_phi_TS_examples(pair_4x2):
    Phi = pair_4x2.maps["Phi"]
    M = module_stinespring(Phi)
    I = CommutantElement.identity(M)
    assert np.abs(phi_TS(M, None, I).matrix - Phi.matrix).max() <= 1e-10
    lam = 0.3
    assert np.abs(phi_TS(M, None, lam * I).matrix - lam * Phi.matrix).max() <= 1e-10
    with pytest.raises(NotPositiveError):
        phi_TS(M, None, -1.0 * I)


@given(seeds)
def test_phi_TS_is_a_phi_T_squared_map(seed):
    rng = np.random.default_rng(seed)
    Phi = random_phi_map(rng)
    M = module_stinespring(Phi)
    TS = sample_positive_contraction(module_commutant(M), rng)
    out = phi_TS(M, None, TS)
    assert phi_map_check(out)
    want = phi_T(M.S, TS.T1 @ TS.T1, 1e-8)
    assert induced_phi(out.matrix, out.domain, out.codomain).distance(want) <= 1e-8


def test_rn_derivative_examples(rng, pair_5x2):
    Phi = random_phi_map(rng)
    rn = rn_derivative(Phi, Phi)
    assert rn.delta.distance(CommutantElement.identity(rn.M_Phi)) <= 1e-8
    half = PhiMap(Phi.domain, Phi.codomain, 0.5 * Phi.matrix, 0.25 * Phi.underlying)
    rn = rn_derivative(Phi, half)
    assert rn.delta.distance(0.25 * CommutantElement.identity(rn.M_Phi)) <= 1e-8
    Phi = pair_5x2.maps["Phi"]
    rn = rn_derivative(Phi, pair_5x2.maps["Psi"])
    assert rn.delta.distance(CommutantElement.identity(rn.M_Phi)) <= 1e-8
    double = PhiMap(Phi.domain, Phi.codomain, 2.0 * Phi.matrix, 4.0 * Phi.underlying)
    with pytest.raises(OrderError):
        rn_derivative(Phi, double)


@settings(max_examples=15)
@given(seeds)
def test_rn_derivative_round_trip(seed):
    rng = np.random.default_rng(seed)
    Phi = random_phi_map(rng)
    M = module_stinespring(Phi)
    TS = sample_positive_contraction(module_commutant(M), rng)
    Psi = phi_TS(M, None, TS.sqrt())
    rn = rn_derivative(Phi, Psi, M_Phi=M)
    assert rn.delta.distance(TS) <= 1e-8
    r = rn.residuals
    assert r["intertwining"] <= 1e-8 and r["I_J_intertwining"] <= 1e-8
    assert r["norm_excess"] <= 1e-9
    assert r["equivalence"] <= 1e-8
    assert rn.J.norm() <= 1 + 1e-9 and rn.I.norm() <= 1 + 1e-9
    assert rn.delta.is_positive()


@settings(max_examples=10)
@given(seeds)
def test_equivalent_inputs_give_equal_derivatives(seed):
    rng = np.random.default_rng(seed)
    Phi = random_phi_map(rng)
    M = module_stinespring(Phi)
    TS = sample_positive_contraction(module_commutant(M), rng)
    Psi1 = phi_TS(M, None, TS.sqrt())
    F = Psi1.codomain
    Q = ModuleOperator(F, F, tuple(np.linalg.qr(cgauss(rng, (m, m)))[0] for m in F.heights))
    Psi2 = Psi1.with_matrix(np.array([(Q @ Psi1(x)).vec() for x in Psi1.domain.basis()]).T)
    assert equivalence_check(Psi1, Psi2)
    d1 = rn_derivative(Phi, Psi1, M_Phi=M).delta
    d2 = rn_derivative(Phi, Psi2, M_Phi=M).delta
    assert d1.distance(d2) <= 1e-8


# partial isometries between equivalent maps

def test_partial_isometry_for_identical_maps(rng):
    Phi = random_phi_map(rng, pad=1)
    res = equivalent_partial_isometry(Phi, Phi)
    W = module_stinespring(Phi).W
    assert res.V.distance(W.adjoint() @ W) <= 1e-8
    assert is_partial_isometry(res.V)


@pytest.mark.parametrize("name", ["pair_5x2", "pair_4x2"])
def test_partial_isometry_for_worked_pairs(name, request):
    inst = request.getfixturevalue(name)
    res = equivalent_partial_isometry(inst.maps["Phi"], inst.maps["Psi"])
    assert max(res.residuals.values()) <= 1e-8
    assert is_partial_isometry(res.V)


def test_reference_intertwiner_of_4x2_pair(pair_4x2):
    Phi, Psi = pair_4x2.maps["Phi"], pair_4x2.maps["Psi"]
    r = partial_isometry_conditions(pair_4x2.operators["V_reference"], module_stinespring(Phi),
                                    module_stinespring(Psi))
    assert max(r.values()) <= 1e-10


def test_corrected_intertwiner_of_5x2_pair(pair_5x2):
    Phi, Psi = pair_5x2.maps["Phi"], pair_5x2.maps["Psi"]
    V = pair_5x2.operators["V_reference"].blocks[0].copy()
    V[1] = np.array([-1, 1, 0, 0, 1]) / np.sqrt(3)
    F = Phi.codomain
    r = partial_isometry_conditions(ModuleOperator(F, F, (V,)), module_stinespring(Phi), module_stinespring(Psi))
    assert max(r.values()) <= 1e-10


def test_partial_isometry_rejects_inequivalent(rng):
    Phi = random_phi_map(rng)
    half = PhiMap(Phi.domain, Phi.codomain, 0.5 * Phi.matrix, 0.25 * Phi.underlying)
    with pytest.raises(NotEquivalentError):
        equivalent_partial_isometry(Phi, half)


# reduced construction

def test_reduced_for_identical_maps(rng):
    Phi = random_phi_map(rng)
    red = reduced_stinespring(Phi, Phi)
    assert red.P1.distance(red.rn.M_Phi.S.K.identity()) <= 1e-8
    assert red.P2.distance(red.rn.M_Phi.K.identity()) <= 1e-8
    assert red.module.K.heights == red.rn.M_Phi.K.heights
    assert red.residuals["minimal"] == 0.0


@settings(max_examples=10)
@given(seeds)
def test_reduced_rank_deficient(seed):
    rng = np.random.default_rng(seed)
    Phi, M, C = _rich_instance(rng)
    TS = sample_rank_deficient(C, rng)
    red = reduced_stinespring(Phi, phi_TS(M, None, TS.sqrt()), M_Phi=M)
    r = red.residuals
    assert r["minimal"] == 0.0
    assert sum(red.algebra.K.heights) + sum(red.module.K.heights) < sum(M.S.K.heights) + sum(M.K.heights)
    for key in ("projections_in_commutant", "kernels_in_commutant", "coisometry", "range_projection_identity"):
        assert r[key] <= 1e-8, key
    assert r["reconstruction_equivalence"] <= 1e-8
    assert r["reconstruction_matches_root"] <= 1e-8


# order isomorphism and purity

def test_order_iso_examples(rng):
    Phi, M, C = _rich_instance(rng)
    I = CommutantElement.identity(M)
    rep = order_iso_check(Phi, elements=[I], ordered_pairs=[], M_Phi=M)
    assert rep["passed"] and rep["max_roundtrip_residual"] <= 1e-10
    rep = order_iso_check(Phi, elements=[], ordered_pairs=[(0.25 * I, 0.5 * I)], M_Phi=M)
    assert rep["passed"] and rep["phi_order_preserved"]


def test_order_iso_random_samples():
    rep = order_iso_check(random_phi_map(np.random.default_rng(8)), samples=50, rng=np.random.default_rng(9))
    assert rep["failures"] == 0
    assert rep["max_roundtrip_residual"] <= 1e-8 and rep["max_order_violation"] <= 1e-8
    assert rep["passed"]


def test_purity_examples(pair_5x2):
    assert is_pure(_identity_phi((2,)))
    assert not is_pure(_identity_phi((2, 2)))
    Phi = pair_5x2.maps["Phi"]
    assert is_pure(Phi) == (module_commutant(module_stinespring(Phi)).dim == 1)
    with pytest.raises(ValueError):
        is_pure(Phi.with_matrix(np.zeros_like(Phi.matrix)))


@given(seeds)
def test_rank_one_kraus_maps_are_pure(seed):
    rng = np.random.default_rng(seed)
    A = random_algebra(rng)
    B = BlockAlgebra((int(rng.integers(1, 4)),))
    j = int(rng.integers(A.num_blocks))
    E = ModuleShape(A, tuple(int(rng.integers(1, 3)) for _ in A.block_dims))
    Phi = kraus_phi_map(E, B, {(j, 0): [cgauss(rng, (A.block_dims[j], B.block_dims[0]))]})
    assert is_pure(Phi)
    M = module_stinespring(Phi)
    lam = rng.uniform(0.1, 1.0)
    # the only elements below a pure map are its multiples
    assert np.abs(phi_TS(M, None, lam * CommutantElement.identity(M)).matrix - lam * Phi.matrix).max() <= 1e-10
