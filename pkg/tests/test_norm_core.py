import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_directions, strict_specs
from minkowski_affine.errors import DifferentiationFailure, NotStronglyConvex, PhiDomainViolation, SpecError
from minkowski_affine.norm_core import (
    cross_validate,
    evaluate,
    evaluate_many,
    fd_jet3,
    jet3,
    tensors,
    tensors_many,
    cartan_form_is_dtau,
)
from minkowski_affine.specs import AlphaBetaNorm, EuclideanNorm, NavigationNorm, PhiSpec, RandersNorm


def _specs():
    from conftest import general_ab
    return [
        EuclideanNorm(np.diag([1.0, 2.0, 3.0])),
        RandersNorm(np.eye(3), [0.0, 0.0, 0.5]),
        AlphaBetaNorm(np.eye(3), [0.1, 0.0, 0.6], PhiSpec("quadratic", 0.15)),
        general_ab(),
        *strict_specs()[3:],
    ]


SPECS = _specs()
IDS = ["euclid", "randers", "ab", "general_ab", "strict3", "strict4"]


def test_evaluate_examples():
    assert evaluate(EuclideanNorm(np.eye(3)), [0, 0, 1]) == pytest.approx(1.0)
    assert evaluate(RandersNorm(np.eye(3), [0, 0, 0.5]), [0, 0, 1]) == pytest.approx(1.5)
    nav = NavigationNorm(EuclideanNorm(np.eye(3)), [0, 0, 0.5])
    assert evaluate(nav, [0, 0, 1]) == pytest.approx(2.0, rel=1e-14)
    assert evaluate(nav, [0, 0, -1]) == pytest.approx(2 / 3, rel=1e-14)


def test_zero_vector_rejected():
    with pytest.raises(SpecError):
        evaluate(EuclideanNorm(np.eye(2)), [0, 0])


def test_phi_domain():
    spec = AlphaBetaNorm(np.eye(3), [0, 0, 1.0], PhiSpec("quadratic", -2.0))
    with pytest.raises(PhiDomainViolation):
        evaluate(spec, [0, 0, 1.0])


def test_nonconvex_rejected():
    spec = AlphaBetaNorm(np.eye(3), [0, 0, 1.0], PhiSpec("quadratic", -0.9))
    with pytest.raises(NotStronglyConvex):
        tensors(spec, [1.0, 0.0, 0.0])


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_homogeneity(spec, rng):
    Y = rng.normal(size=(100, 3))
    F = evaluate_many(spec, Y)
    for lam in (0.5, 2.0, 7.0):
        np.testing.assert_allclose(evaluate_many(spec, lam * Y), lam * F, rtol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 1e-3),
       st.floats(0.01, 100))
def test_homogeneity_property(y, lam):
    spec = SPECS[3]
    y = np.array(y)
    assert evaluate(spec, lam * y) == pytest.approx(lam * evaluate(spec, y), rel=1e-10)


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_tensor_identities(spec, rng):
    Y = rng.normal(size=(100, 3))
    T = tensors_many(spec, Y)
    F = T.F
    scale = np.linalg.norm(Y, axis=1)
    gyy = np.einsum("nab,na,nb->n", T.g, Y, Y)
    np.testing.assert_allclose(gyy, F**2, rtol=1e-9)
    assert np.abs(np.einsum("nab,nb->na", T.h, Y) / F[:, None]).max() < 1e-8
    assert np.abs(np.einsum("nabc,nc->nab", T.A, Y) / F[:, None, None]).max() < 1e-8
    assert np.abs(np.einsum("na,na->n", T.I, Y) / F).max() < 1e-8
    proj = np.einsum("nab,nbc->nac", T.h_inv, T.h)
    target = np.eye(3) - Y[:, :, None] * T.ell[:, None, :] / F[:, None, None]
    assert np.abs(proj - target).max() < 1e-8
    for perm in ("nacb", "nbac", "ncba"):
        assert np.abs(T.M - np.einsum(f"nabc->{perm}", T.M)).max() < 1e-8
        assert np.abs(T.A - np.einsum(f"nabc->{perm}", T.A)).max() < 1e-8
    trace = np.einsum("nbc,nabc->na", T.h_inv, T.M)
    assert np.abs(trace * scale[:, None]).max() < 1e-8


def test_printed_matsumoto_is_not_tracefree():
    spec = SPECS[2]
    T = tensors(spec, [0.3, -0.2, 1.0], matsumoto="printed")
    assert np.abs(np.einsum("bc,abc->a", T.h_inv, T.M)).max() > 1e-4


def test_euclidean_is_flat():
    T = tensors(EuclideanNorm(np.eye(3)), [0.2, 0.3, 0.9])
    np.testing.assert_allclose(T.g, np.eye(3), atol=1e-14)
    for X in (T.A, T.I, T.M):
        assert np.abs(X).max() < 1e-14
    assert abs(T.tau) < 1e-14


def test_jet_examples():
    j = jet3(EuclideanNorm(np.diag([1.0, 4.0])), [1.0, 0.0])
    np.testing.assert_allclose(j.gradient, [2.0, 0.0])
    np.testing.assert_allclose(j.hessian, np.diag([2.0, 8.0]))
    assert np.abs(j.third).max() == 0
    r = jet3(RandersNorm(np.eye(2), [0.0, 0.3]), [1.0, 0.0])
    assert np.abs(r.third).max() > 0.1
    for p in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
        np.testing.assert_allclose(r.third, r.third.transpose(p), atol=1e-14)
    assert np.abs(r.third @ np.array([1.0, 0.0])).max() < 1e-12
    oracle = fd_jet3(RandersNorm(np.eye(2), [0.0, 0.3]), [1.0, 0.0])
    np.testing.assert_allclose(r.third, oracle.third, atol=1e-7)


@pytest.mark.parametrize("spec", SPECS, ids=IDS)
def test_euler_identities_and_cross_validation(spec, rng):
    for y in rng.normal(size=(5, 3)):
        j = jet3(spec, y, scheme="checked")
        assert y @ j.gradient == pytest.approx(2 * j.value, rel=1e-9)
        np.testing.assert_allclose(y @ j.hessian, j.gradient, rtol=1e-9, atol=1e-12)
        errs = cross_validate(j, fd_jet3(spec, y))
        assert max(errs.values()) < 1e-5


def test_cross_validation_failure():
    spec = SPECS[1]
    good = jet3(spec, [1.0, 0.2, 0.3])
    from dataclasses import replace
    bad = replace(good, hessian=good.hessian + 1e-4)
    with pytest.raises(DifferentiationFailure):
        cross_validate(bad, fd_jet3(spec, [1.0, 0.2, 0.3]))


def test_two_dimensional_matsumoto_vanishes(rng):
    for spec in (RandersNorm(np.eye(2), [0.2, 0.3]),
                 AlphaBetaNorm(np.diag([1.0, 2.0]), [0.3, 0.1], PhiSpec("exponential", 0.3))):
        T = tensors_many(spec, rng.normal(size=(50, 2)))
        assert np.abs(T.M).max() < 1e-10


def test_randers_matsumoto_vanishes(rng):
    T = tensors_many(SPECS[1], rng.normal(size=(50, 3)))
    assert np.abs(T.M).max() < 1e-10


def test_navigation_with_zero_shift(rng):
    base = SPECS[2]
    Y = rng.normal(size=(30, 3))
    np.testing.assert_allclose(evaluate_many(NavigationNorm(base, [0, 0, 0]), Y), evaluate_many(base, Y), rtol=1e-13)


@pytest.mark.parametrize("spec", SPECS[1:], ids=IDS[1:])
def test_cartan_form_is_dtau(spec, rng):
    for u in random_directions(rng, 5):
        y = u / evaluate(spec, u)
        T = tensors(spec, y)
        v = np.cross(T.ell, rng.normal(size=3))
        a, b = cartan_form_is_dtau(spec, y, v)
        assert a == pytest.approx(b, abs=1e-6 * np.linalg.norm(v))
    assert cartan_form_is_dtau(EuclideanNorm(np.eye(3)), [1.0, 0, 0], [0, 1.0, 0]) == pytest.approx((0, 0), abs=1e-12)


def test_cartan_form_needs_indicatrix_point():
    with pytest.raises(SpecError):
        cartan_form_is_dtau(SPECS[1], [2.0, 0, 0], [0, 1.0, 0])


def test_parallel_evaluation_is_deterministic(rng):
    from concurrent.futures import ThreadPoolExecutor
    Y = rng.normal(size=(300, 3))
    spec = SPECS[3]
    with ThreadPoolExecutor(4) as ex:
        outs = list(ex.map(lambda _: evaluate_many(spec, Y), range(4)))
    for o in outs[1:]:
        assert np.array_equal(o, outs[0])
