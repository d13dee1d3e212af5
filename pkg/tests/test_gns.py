import numpy as np
import pytest
from hypothesis import given, strategies as st

from pseudoherm.errors import DimensionMismatch, NotNormalized, NotPositive
from pseudoherm.ensembles import random_density, random_pure
from pseudoherm.gns import (
    StateFunctional,
    close_algebra,
    full_matrix_algebra,
    gns_construct,
    product_representation,
)

from conftest import I2, SX, SY, SZ

seeds = st.integers(0, 2**32 - 1)


def test_close_algebra_examples():
    assert close_algebra([SZ]).size == 2
    full = close_algebra([SX, SZ])
    assert full.size == 4
    assert full.contains(SY)
    sub = close_algebra([np.kron(SX, I2), np.kron(SZ, I2)])
    assert sub.size == 4
    assert sub.contains(np.kron(SY, I2))
    assert not sub.contains(np.kron(I2, SX))
    for alg in (full, sub):
        assert alg.closure_residual() <= 1e-10
        assert alg.contains(np.eye(alg.ambient_dim))


def test_close_algebra_errors():
    with pytest.raises(DimensionMismatch):
        close_algebra([SX, np.eye(3)])


def test_basis_is_hs_orthonormal():
    alg = full_matrix_algebra(3)
    S = np.array([b.reshape(-1) for b in alg.basis])
    np.testing.assert_allclose(S.conj() @ S.T, np.eye(9), atol=1e-12)
    np.testing.assert_allclose(alg.basis[0], np.eye(3) / np.sqrt(3))


def test_gns_pure_state_dimension():
    alg = full_matrix_algebra(2)
    rep = gns_construct(StateFunctional.from_density(alg, np.diag([1.0, 0.0])))
    assert rep.hilbert_dim == 2


def test_gns_maximally_mixed_is_faithful():
    alg = full_matrix_algebra(2)
    rep = gns_construct(StateFunctional.from_density(alg, I2 / 2))
    assert rep.hilbert_dim == 4
    np.testing.assert_allclose(rep.gram_spectrum, [0.5] * 4, atol=1e-12)


def test_gns_one_point_support():
    alg = close_algebra([np.diag([1.0, 0.0])])
    assert alg.size == 2
    omega = StateFunctional.from_density(alg, np.diag([1.0, 0.0]))
    rep = gns_construct(omega)
    assert rep.hilbert_dim == 1
    assert abs(omega(np.diag([3.0, 7.0])) - 3.0) < 1e-12


def test_gns_errors():
    alg = full_matrix_algebra(2)
    with pytest.raises(NotPositive):
        gns_construct(StateFunctional.from_density(alg, np.diag([1.5, -0.5])))
    with pytest.raises(NotNormalized):
        gns_construct(StateFunctional.from_density(alg, np.diag([1.0, 1.0])))


@given(seeds, st.sampled_from([2, 3, 4]), st.booleans())
def test_gns_residuals(seed, d, pure):
    rng = np.random.default_rng(seed)
    if pure:
        psi = random_pure(d, rng)
        rho = np.outer(psi, psi.conj())
    else:
        rho = random_density(d, rng)
    rep = gns_construct(StateFunctional.from_density(full_matrix_algebra(d), rho))
    assert rep.hilbert_dim == (d if pure else d * d)
    r = rep.residuals()
    assert r["reconstruction"] <= 1e-10
    assert r["homomorphism"] <= 1e-10
    assert r["star"] <= 1e-10
    assert r["cyclic_rank_deficit"] == 0


def test_gns_vectors_carry_state_inner_product(rng):
    alg = full_matrix_algebra(2)
    omega = StateFunctional.from_density(alg, random_density(2, rng))
    rep = gns_construct(omega)
    A, B = alg.basis[1], alg.basis[3]
    assert abs(np.vdot(rep.vector(A), rep.vector(B)) - omega(A.conj().T @ B)) < 1e-12
    assert np.max(np.abs(rep.represent(A) @ rep.vector(B) - rep.vector(A @ B))) < 1e-12


def test_density_membership_reported(rng):
    alg = full_matrix_algebra(2)
    faithful = gns_construct(StateFunctional.from_density(alg, random_density(2, rng)))
    assert faithful.density_in_represented_algebra()[0] is False
    pure = gns_construct(StateFunctional.from_density(alg, np.diag([1.0, 0.0])))
    ok, res = pure.density_in_represented_algebra()
    assert ok and res < 1e-10


def test_product_of_one_dim_reps():
    alg = close_algebra([np.diag([1.0, 0.0])])
    r = gns_construct(StateFunctional.from_density(alg, np.diag([1.0, 0.0])))
    p = product_representation(r, r)
    assert p.hilbert_dim == 1


def test_product_of_faithful_reps(rng):
    alg = full_matrix_algebra(2)
    r1 = gns_construct(StateFunctional.from_density(alg, random_density(2, rng)))
    r2 = gns_construct(StateFunctional.from_density(alg, random_density(2, rng)))
    p = product_representation(r1, r2)
    assert p.hilbert_dim == 16
    for A in (I2, SX, SY, SZ):
        for B in (I2, SX, SY, SZ):
            lhs = p.expectation(np.kron(A, B))
            assert abs(lhs - r1.state(A) * r2.state(B)) < 1e-12
    r = p.residuals()
    assert r["reconstruction"] < 1e-10 and r["homomorphism"] < 1e-10


def test_product_of_pure_reps():
    alg = full_matrix_algebra(2)
    up = np.diag([1.0, 0.0])
    plus = np.full((2, 2), 0.5)
    r1 = gns_construct(StateFunctional.from_density(alg, up))
    r2 = gns_construct(StateFunctional.from_density(alg, plus))
    p = product_representation(r1, r2)
    assert p.hilbert_dim == 4
    assert abs(p.expectation(np.kron(SZ, SZ)) - np.trace(up @ SZ) * np.trace(plus @ SZ)) < 1e-12
    assert abs(p.expectation(np.kron(SZ, SX)) - 1.0) < 1e-12
    np.testing.assert_allclose(p.cyclic_vector, np.kron(r1.cyclic_vector, r2.cyclic_vector))
