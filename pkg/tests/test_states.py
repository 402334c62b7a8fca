import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from symdisc.errors import (
    AngleOutOfDomain,
    InvalidCoefficients,
    NonPositiveCoefficient,
    ZeroCoefficient,
)
from symdisc.states import (
    angles_from_coefficients,
    build_family,
    coefficients_from_angles,
    min_index,
    z_operator,
)

angle = st.floats(min_value=0.02, max_value=math.pi / 2 - 0.02)


def angle_vectors(min_n=2, max_n=8):
    return st.integers(min_n, max_n).flatmap(lambda n: st.lists(angle, min_size=n - 1, max_size=n - 1))


def _product_chain(thetas):
    """Hand-rolled oracle: c_k = cos(t_{k+1}) * prod_{j<=k} sin(t_j)."""
    out = []
    for k in range(len(thetas) + 1):
        sines = math.prod(math.sin(t) for t in thetas[:k])
        out.append(sines * (math.cos(thetas[k]) if k < len(thetas) else 1.0))
    return out


class TestCoefficientsFromAngles:
    def test_equal_amplitudes(self):
        thetas = (math.pi / 3, math.acos(1 / math.sqrt(3)), math.pi / 4)
        assert _product_chain(thetas) == pytest.approx([0.5] * 4, abs=1e-15)
        np.testing.assert_allclose(coefficients_from_angles(thetas), [0.5] * 4, atol=1e-15)

    def test_two_states_at_quarter_pi(self):
        np.testing.assert_allclose(coefficients_from_angles([math.pi / 4]), [math.sqrt(2) / 2] * 2, atol=1e-15)

    def test_reference_angle_example(self):
        t1, t2, t3 = math.pi / 3, 0.3 * math.pi, math.pi / 4
        c = coefficients_from_angles([t1, t2, t3])
        expected = [
            math.cos(t1),
            math.cos(t2) * math.sin(t1),
            math.cos(t3) * math.sin(t2) * math.sin(t1),
            math.sin(t3) * math.sin(t2) * math.sin(t1),
        ]
        np.testing.assert_allclose(c, expected, atol=1e-15)
        assert min_index(c) == 3
        assert np.min(np.abs(c)) == pytest.approx(math.sin(t3) * math.sin(t2) * math.sin(t1), abs=1e-15)

    @pytest.mark.parametrize("bad", [0.0, math.pi / 2, -0.1, 2.0, float("nan")])
    def test_rejects_out_of_domain(self, bad):
        with pytest.raises(AngleOutOfDomain):
            coefficients_from_angles([0.4, bad])

    @settings(max_examples=100, deadline=None)
    @given(angle_vectors())
    def test_matches_product_chain_and_is_normalized(self, thetas):
        c = coefficients_from_angles(thetas)
        np.testing.assert_allclose(c, _product_chain(thetas), atol=1e-14)
        assert abs(np.sum(c**2) - 1) < 1e-12
        assert np.all(c > 0)


class TestAnglesFromCoefficients:
    def test_equal_amplitudes(self):
        np.testing.assert_allclose(
            angles_from_coefficients([0.5] * 4),
            [math.pi / 3, math.acos(1 / math.sqrt(3)), math.pi / 4],
            atol=1e-14,
        )

    def test_degenerate_coefficient(self):
        with pytest.raises(NonPositiveCoefficient):
            angles_from_coefficients([1.0, 0.0, 0.0])

    def test_negative_coefficient(self):
        with pytest.raises(NonPositiveCoefficient):
            angles_from_coefficients([0.6, -0.8])

    def test_round_trip_random(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 10))
            t = rng.uniform(0.01, math.pi / 2 - 0.01, n - 1)
            back = angles_from_coefficients(coefficients_from_angles(t))
            np.testing.assert_allclose(coefficients_from_angles(back), coefficients_from_angles(t), atol=1e-10)
            np.testing.assert_allclose(back, t, atol=1e-10)


class TestZOperator:
    def test_two(self):
        np.testing.assert_allclose(z_operator(2), np.diag([1, -1]), atol=1e-15)

    def test_four(self):
        np.testing.assert_allclose(z_operator(4), np.diag([1, 1j, -1, -1j]), atol=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 4, 7, 16])
    def test_periodic(self, n):
        z = z_operator(n)
        np.testing.assert_allclose(np.linalg.matrix_power(z, n), np.eye(n), atol=1e-12)


class TestFamily:
    def test_equal_amplitudes_are_orthonormal(self):
        fam = build_family([0.5] * 4)
        np.testing.assert_allclose(fam.gram(), np.eye(4), atol=1e-12)

    @pytest.mark.parametrize("theta", [0.1, 0.5, math.pi / 4, 1.2])
    def test_two_state_overlap(self, theta):
        fam = build_family([math.cos(theta), math.sin(theta)])
        # direct oracle: <psi_0|psi_1> = cos^2 - sin^2
        direct = math.cos(theta) ** 2 * 1 + math.sin(theta) ** 2 * (-1)
        assert np.vdot(fam.states[0], fam.states[1]) == pytest.approx(direct, abs=1e-14)
        assert direct == pytest.approx(math.cos(2 * theta), abs=1e-14)

    def test_zero_coefficient(self):
        with pytest.raises(ZeroCoefficient):
            build_family([1.0, 0.0])

    def test_unnormalized(self):
        with pytest.raises(InvalidCoefficients):
            build_family([0.5, 0.5])

    def test_biorthogonality_brute_force(self, angles_for):
        for n in (2, 3, 4, 5, 8):
            fam = build_family(coefficients_from_angles(angles_for(n)))
            for k in range(n):
                for l in range(n):
                    inner = sum(np.conj(fam.reciprocals[k][r]) * fam.states[l][r] for r in range(n))
                    expected = n / math.sqrt(fam.q) if k == l else 0.0
                    assert abs(inner - expected) < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(angle_vectors(2, 8))
    def test_invariants(self, thetas):
        c = coefficients_from_angles(thetas)
        fam = build_family(c)
        n = c.size
        z = z_operator(n)
        norms = np.linalg.norm(fam.states, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)
        np.testing.assert_allclose(np.linalg.norm(fam.reciprocals, axis=1), 1.0, atol=1e-12)
        for l in range(n):
            assert np.linalg.norm(fam.states[l] - np.linalg.matrix_power(z, l) @ fam.states[0]) < 1e-12
            assert np.linalg.norm(fam.reciprocals[l] - np.linalg.matrix_power(z, l) @ fam.reciprocals[0]) < 1e-10
        # Gram matrix is circulant with eigenvalues N c_k^2
        assert np.linalg.det(fam.gram()).real == pytest.approx(n**n * np.prod(c**2), rel=1e-8)
        assert fam.q == pytest.approx(sum(1 / x**2 for x in c), rel=1e-12)

    def test_linear_independence(self, angles_for, rng):
        for n in (2, 3, 4):
            for _ in range(20):
                fam = build_family(coefficients_from_angles(angles_for(n)))
                assert abs(np.linalg.det(fam.gram())) > 1e-12
        # det = N^N prod c_k^2 underflows 1e-12 for very uneven N=8 families,
        # so draw around the equal-amplitude point there
        centre = angles_from_coefficients(np.full(8, 1 / math.sqrt(8)))
        for _ in range(20):
            fam = build_family(coefficients_from_angles(centre + rng.uniform(-0.2, 0.2, 7)))
            assert abs(np.linalg.det(fam.gram())) > 1e-12

    def test_family_is_immutable(self):
        fam = build_family([0.6, 0.8])
        with pytest.raises(ValueError):
            fam.states[0, 0] = 0.0


def test_min_index_tie_breaks_to_smallest():
    assert min_index([0.5, 0.5, 0.5, 0.5]) == 0
    assert min_index([0.6, 0.4, 0.4, math.sqrt(1 - 0.68)]) == 1
