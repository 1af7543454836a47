import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_spec
from levycarma import (
    CarmaSpec,
    DomainError,
    SingularityError,
    StateSpace,
    beta_coefficients,
    companion,
    spectrum,
    transfer_function,
    verify_equivalence,
)
from levycarma.qml import bivariate_example

SPEC21 = CarmaSpec.univariate([3.0, 2.0], [1.0, 2.0])


def _scalars(mats):
    return [float(m[0, 0]) for m in mats]


def test_beta_examples():
    assert _scalars(beta_coefficients(CarmaSpec.univariate([0.6], [1.0]))) == [1.0]
    assert _scalars(beta_coefficients(SPEC21)) == [1.0, -1.0]
    assert _scalars(beta_coefficients(CarmaSpec.univariate([3.0, 3.0, 1.0], [1.0, 0.0]))) == [0.0, 1.0, -3.0]


def test_companion_examples():
    ou = companion(CarmaSpec.univariate([0.6], [1.0]))
    assert ou.A.tolist() == [[-0.6]] and ou.B.tolist() == [[1.0]] and ou.C.tolist() == [[1.0]]
    ss = companion(CarmaSpec.univariate([3.0, 2.0], [1.0]))
    assert ss.A.tolist() == [[0.0, 1.0], [-2.0, -3.0]]
    assert ss.B.ravel().tolist() == [0.0, 1.0]
    assert ss.C.tolist() == [[1.0, 0.0]]
    assert sorted(np.linalg.eigvals(ss.A).real) == pytest.approx([-2.0, -1.0])


def test_bivariate_family_matrices():
    t = [-1.0, -2.0, 1.0, -2.0, -3.0, 1.0, 2.0, 0.4695, -0.1622, 0.3756]
    ss = bivariate_example().build(t)
    assert ss.A.tolist() == [[-1, -2, 0], [0, 0, 1], [1, -2, -3]]
    assert ss.B.tolist() == [[-1, -2], [1, 2], [1 - 3 * 1, -2 - 3 * 2]]
    assert ss.C.tolist() == [[1, 0, 0], [0, 1, 0]]
    assert ss.sigma_l.tolist() == [[0.4695, -0.1622], [-0.1622, 0.3756]]


def test_transfer_function_examples():
    ou = CarmaSpec.univariate([0.6], [1.0])
    assert transfer_function(companion(ou), 0.0)[0, 0] == pytest.approx(1 / 0.6)
    assert transfer_function(ou, 0.0)[0, 0] == pytest.approx(1 / 0.6)
    assert transfer_function(SPEC21, 1.0)[0, 0] == pytest.approx(0.5)
    assert transfer_function(companion(SPEC21), 1.0)[0, 0] == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(5))
def test_transfer_function_asymptotics(seed):
    spec = random_spec(np.random.default_rng(seed))
    z = 1e6
    lead = z ** (spec.p - spec.q) * transfer_function(companion(spec), z)
    assert np.allclose(lead, spec.ma[0], rtol=1e-4, atol=1e-4 * np.abs(spec.ma[0]).max())


def test_transfer_function_singular():
    ou = companion(CarmaSpec.univariate([0.6], [1.0]))
    with pytest.raises(SingularityError) as exc:
        transfer_function(ou, -0.6)
    assert exc.value.z == -0.6


def test_spectrum_examples():
    s = spectrum(companion(CarmaSpec.univariate([0.6], [1.0])))
    assert s.eigenvalues == pytest.approx([-0.6]) and s.causal
    s = spectrum(companion(CarmaSpec.univariate([3.0, 2.0], [1.0])))
    assert sorted(e.real for e in s.eigenvalues) == pytest.approx([-2.0, -1.0]) and s.causal
    s = spectrum(companion(CarmaSpec.univariate([-1.0], [1.0])))
    assert s.eigenvalues == pytest.approx([1.0]) and not s.causal


def test_spectrum_zero_real_part_is_noncausal():
    assert not spectrum(StateSpace([[0.0, 1.0], [-1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])).causal


def test_verify_equivalence_examples():
    assert verify_equivalence(companion(SPEC21), SPEC21) < 1e-10
    perturbed = CarmaSpec.univariate([3.0, 2.0], [1.0, 2.1])
    assert verify_equivalence(companion(SPEC21), perturbed) >= 0.01
    ou = CarmaSpec.univariate([0.6], [1.0])
    assert verify_equivalence(companion(ou), ou) < 1e-15


def test_verify_equivalence_pole_hit():
    with pytest.raises(SingularityError):
        verify_equivalence(companion(SPEC21), SPEC21, test_points=[-1.0])


def test_spec_invariants():
    with pytest.raises(DomainError):
        CarmaSpec.univariate([1.0], [1.0, 2.0])  # q >= p
    with pytest.raises(DomainError):
        CarmaSpec.univariate([1.0, 2.0], [0.0])  # B_0 = 0
    with pytest.raises(DomainError):
        CarmaSpec((np.eye(2),), (np.ones((3, 1)),))
    with pytest.raises(DomainError):
        StateSpace(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), [[-1.0, 0.0], [1.0, 0.0]])


def test_state_space_read_only():
    ss = companion(SPEC21)
    with pytest.raises(ValueError):
        ss.A[0, 0] = 5.0


@pytest.mark.parametrize("seed", range(10))
def test_json_round_trip(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng)
    again = CarmaSpec.from_dict(json.loads(json.dumps(spec.to_dict())))
    assert all(np.array_equal(a, b) for a, b in zip(spec.ar + spec.ma, again.ar + again.ma))
    ss = companion(spec, np.eye(spec.m) * 0.3)
    ss2 = StateSpace.from_dict(json.loads(json.dumps(ss.to_dict())))
    for name in ("A", "B", "C", "sigma_l"):
        assert np.array_equal(getattr(ss, name), getattr(ss2, name))


def test_declared_dims_checked():
    d = SPEC21.to_dict()
    d["p"] = 3
    with pytest.raises(DomainError):
        CarmaSpec.from_dict(d)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_beta_degree_property(seed):
    spec = random_spec(np.random.default_rng(seed))
    beta = beta_coefficients(spec)
    for k in range(spec.p - spec.q - 1):
        assert not np.any(beta[k])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_causality_similarity_invariant(seed):
    rng = np.random.default_rng(seed)
    ss = companion(random_spec(rng))
    t = rng.normal(size=(ss.N, ss.N)) + 3 * np.eye(ss.N)
    sim = StateSpace(t @ ss.A @ np.linalg.inv(t), t @ ss.B, ss.C @ np.linalg.inv(t))
    assert spectrum(sim).causal == spectrum(ss).causal
    assert np.sort_complex(np.array(spectrum(sim).eigenvalues)) == pytest.approx(
        np.sort_complex(np.array(spectrum(ss).eigenvalues)), abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_companion_injective(seed):
    rng = np.random.default_rng(seed)
    spec = random_spec(rng)
    ar = list(spec.ar)
    ar[-1] = ar[-1] + 0.01
    other = CarmaSpec(tuple(ar), spec.ma)
    assert not np.array_equal(companion(spec).A, companion(other).A)
    assert np.array_equal(companion(spec).A, companion(spec).A)
