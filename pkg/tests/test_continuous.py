from fractions import Fraction

import numpy as np
import numpy.testing as npt
import pytest
from conftest import random_constrained
from scipy.spatial.transform import Rotation

from suslov_lab.errors import ConstraintError, DegenerateError, NonConvergence
from suslov_lab.models.state import ConstraintCovector, InertiaTensor
from suslov_lab.numerics.continuous import (
    attitude_rate,
    eliminate_multiplier,
    inertial_offset,
    integrate_reference,
    lagrangian_gradient,
    multiplier_form,
    quadratic_increment,
    reconstruct_step,
    reduced_energy,
    reduced_lagrangian,
    reference_increment,
    rk4_step,
    spin_coupling,
    spin_coupling_form,
    suslov_multiplier,
    suslov_rhs,
    unreduced_constraint_residual,
)
from suslov_lab.numerics.so3 import entrywise_norm, hat_matrix


def _det(m):
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _solve(m, b):
    """Cramer's rule over Fractions"""
    d = _det(m)
    out = []
    for j in range(3):
        mj = [[b[i] if c == j else m[i][c] for c in range(3)] for i in range(3)]
        out.append(_det(mj) / d)
    return out


def exact_projected_field(matrix, a, w):
    """Exact (field, multiplier) of I dw/dt = (I w) x w + lam a with <a, dw/dt> = 0.

    Inputs are floats; they are converted to Fractions without rounding, so the
    result is the exact value for the floats the code under test sees.
    """
    M = [[Fraction(float(x)) for x in row] for row in np.asarray(matrix)]
    a = [Fraction(float(x)) for x in a]
    w = [Fraction(float(x)) for x in w]
    Mw = [sum(M[i][j] * w[j] for j in range(3)) for i in range(3)]
    torque = [
        Mw[1] * w[2] - Mw[2] * w[1],
        Mw[2] * w[0] - Mw[0] * w[2],
        Mw[0] * w[1] - Mw[1] * w[0],
    ]
    f = _solve(M, torque)
    compliance_a = _solve(M, a)
    lam = -sum(ai * fi for ai, fi in zip(a, f)) / sum(ai * ci for ai, ci in zip(a, compliance_a))
    return [fi + lam * ci for fi, ci in zip(f, compliance_a)], lam


RATIONAL_BODIES = [
    [[1.0, 0.1, 0.2], [0.1, 1.0, 0.2], [0.2, 0.1, 1.0]],
    [[2.0, 0.5, -0.25], [0.5, 1.5, 0.125], [-0.25, 0.125, 3.0]],
    [[1.25, -0.375, 0.5], [0.25, 2.0, -0.75], [0.625, 0.5, 1.75]],
]
# each velocity satisfies <a, w> = 0 exactly in binary floating point
RATIONAL_CONSTRAINTS = [
    ((0.0, 0.0, 1.0), [(0.4, 0.5, 0.0), (-3.5, 1.25, 0.0), (48.0, -27.5, 0.0)]),
    ((0.0, 1.0, 1.0), [(0.25, 0.5, -0.5), (-7.0, 3.75, -3.75)]),
    ((1.0, 2.0, -1.0), [(0.75, 0.5, 1.75), (-12.0, 10.5, 9.0)]),
]


def _magnitude(rows, w):
    """|I| |w|^2, the size of the gyroscopic term"""
    return float(np.linalg.norm(rows)) * float(np.dot(w, w))


def _exact_cases():
    for rows in RATIONAL_BODIES:
        for a, velocities in RATIONAL_CONSTRAINTS:
            for w in velocities:
                yield rows, a, w


class TestRationalOracle:
    @pytest.mark.parametrize("rows,a,w", list(_exact_cases()))
    def test_eliminate_multiplier(self, rows, a, w):
        inertia = InertiaTensor(matrix=np.array(rows))
        covector = ConstraintCovector(a=a)
        field, lam = eliminate_multiplier(inertia, covector, w)
        exact_field, exact_lam = exact_projected_field(rows, covector.a, w)
        expected = np.array([float(x) for x in exact_field])
        scale = _magnitude(rows, w)
        npt.assert_allclose(field, expected, rtol=1e-14, atol=1e-14 * scale)
        assert lam == pytest.approx(float(exact_lam), rel=1e-14, abs=1e-14 * scale)

    @pytest.mark.parametrize("rows", RATIONAL_BODIES)
    @pytest.mark.parametrize("w", RATIONAL_CONSTRAINTS[0][1])
    def test_planar_field_and_multiplier(self, rows, w):
        inertia = InertiaTensor(matrix=np.array(rows))
        exact_field, exact_lam = exact_projected_field(rows, (0.0, 0.0, 1.0), w)
        assert exact_field[2] == 0
        expected = np.array([float(x) for x in exact_field])
        scale = _magnitude(rows, w)
        npt.assert_allclose(suslov_rhs(inertia, w), expected, rtol=1e-14, atol=1e-14 * scale)
        assert suslov_multiplier(inertia, w) == pytest.approx(float(exact_lam), rel=1e-14, abs=1e-14 * scale)

    def test_reference_body_values(self):
        field, lam = exact_projected_field(RATIONAL_BODIES[0], (0.0, 0.0, 1.0), (0.4, 0.5, 0.0))
        assert float(field[0]) == pytest.approx(float(Fraction(-39, 550)), rel=1e-15)
        assert float(field[1]) == pytest.approx(float(Fraction(13, 220)), rel=1e-15)
        assert float(lam) == pytest.approx(float(Fraction(-19, 1100)), rel=1e-15)


class TestReferenceBody:
    """Closed-form values at w0 = (0.4, 0.5, 0) for the reference inertia"""

    def test_vector_field(self, inertia, omega0):
        f = suslov_rhs(inertia, omega0)
        assert f[0] == pytest.approx(float(Fraction(-39, 550)), abs=1e-12)
        assert f[1] == pytest.approx(float(Fraction(13, 220)), abs=1e-12)
        assert f[2] == 0.0

    def test_multiplier_parts(self, inertia, omega0):
        assert spin_coupling(inertia, omega0) == pytest.approx(-0.009, abs=1e-12)
        assert inertial_offset(inertia, omega0) == pytest.approx(float(Fraction(-91, 11000)), abs=1e-12)
        assert suslov_multiplier(inertia, omega0) == pytest.approx(float(Fraction(-19, 1100)), abs=1e-12)

    def test_energy(self, inertia, omega0):
        assert reduced_energy(inertia, omega0) == pytest.approx(0.225, abs=1e-12)
        assert reduced_lagrangian(inertia, omega0) == pytest.approx(0.225, abs=1e-12)

    def test_zero_velocity(self, inertia):
        zero = np.zeros(3)
        npt.assert_array_equal(suslov_rhs(inertia, zero), zero)
        assert suslov_multiplier(inertia, zero) == 0.0
        assert reduced_energy(inertia, zero) == 0.0


class TestDiagonalBody:
    def test_no_motion_without_coupling(self, diagonal_inertia, rng):
        for w in random_constrained(rng, 50):
            npt.assert_array_equal(suslov_rhs(diagonal_inertia, w), np.zeros(3))
            assert inertial_offset(diagonal_inertia, w) == 0.0

    def test_multiplier_is_spin_coupling(self, diagonal_inertia, rng):
        for w in random_constrained(rng, 50):
            assert suslov_multiplier(diagonal_inertia, w) == pytest.approx(w[0] * w[1], abs=1e-15)
            assert reduced_energy(diagonal_inertia, w) == pytest.approx(0.5 * w[0] ** 2 + w[1] ** 2)


class TestMultiplierElimination:
    def test_matches_closed_form(self, inertia, rng):
        a = ConstraintCovector.canonical()
        for w in random_constrained(rng, 1000, scale=2.0):
            field, lam = eliminate_multiplier(inertia, a, w)
            npt.assert_allclose(field, suslov_rhs(inertia, w), atol=1e-12)
            assert lam == pytest.approx(suslov_multiplier(inertia, w), abs=1e-12)

    def test_general_covector_stays_tangent(self, inertia, rng):
        a = ConstraintCovector(a=(0.0, 1.0, 1.0))
        for _ in range(100):
            w = np.cross(a.a, rng.normal(size=3))
            field, _ = eliminate_multiplier(inertia, a, w)
            assert abs(float(a.a @ field)) <= 1e-12 * max(1.0, float(np.linalg.norm(w)) ** 2)

    def test_requires_positive_definite(self):
        indefinite = InertiaTensor(matrix=np.diag([1.0, 1.0, -1.0]))
        with pytest.raises(DegenerateError):
            eliminate_multiplier(indefinite, ConstraintCovector.canonical(), [0.1, 0.2, 0.0])

    def test_requires_constraint(self, inertia):
        with pytest.raises(ConstraintError):
            eliminate_multiplier(inertia, ConstraintCovector.canonical(), [0.1, 0.2, 0.3])

    def test_zero_covector(self):
        with pytest.raises(DegenerateError):
            ConstraintCovector(a=(0.0, 0.0, 0.0))


class TestQuadraticForms:
    def test_multiplier_form(self, inertia, rng):
        Q = multiplier_form(inertia)
        npt.assert_array_equal(Q, Q.T)
        for w in random_constrained(rng, 500, scale=3.0):
            assert w[:2] @ Q @ w[:2] == pytest.approx(suslov_multiplier(inertia, w), rel=1e-12, abs=1e-14)

    def test_spin_coupling_form(self, inertia, rng):
        G = spin_coupling_form(inertia)
        for w in random_constrained(rng, 500, scale=3.0):
            assert w[:2] @ G @ w[:2] == pytest.approx(spin_coupling(inertia, w), rel=1e-12, abs=1e-14)

    def test_increment(self, inertia, rng):
        Q = multiplier_form(inertia)
        for w, d in zip(random_constrained(rng, 200), random_constrained(rng, 200, scale=1e-3)):
            direct = (w + d)[:2] @ Q @ (w + d)[:2] - w[:2] @ Q @ w[:2]
            assert quadratic_increment(Q, w, d) == pytest.approx(direct, abs=1e-14)


class TestLagrangian:
    def test_gradient_against_central_differences(self, inertia, rng):
        h = 1e-6
        for w in rng.normal(size=(100, 3)):
            fd = np.array([
                (reduced_lagrangian(inertia, w + h * e) - reduced_lagrangian(inertia, w - h * e)) / (2 * h)
                for e in np.eye(3)
            ])
            npt.assert_allclose(lagrangian_gradient(inertia, w), fd, atol=1e-7)

    def test_energy_is_constant_along_field(self, inertia, rng):
        h = 1e-6
        for w in random_constrained(rng, 100):
            f = suslov_rhs(inertia, w)
            rate = (reduced_energy(inertia, w + h * f) - reduced_energy(inertia, w - h * f)) / (2 * h)
            assert abs(rate) <= 1e-9


class TestReferenceIntegration:
    def test_rk4_energy_drift(self, inertia, omega0):
        traj = integrate_reference(inertia, omega0, 1e-3, 10_000)
        assert traj.shape == (10_001, 3)
        npt.assert_array_equal(traj[0], omega0)
        npt.assert_array_equal(traj[:, 2], 0.0)
        energies = np.array([reduced_energy(inertia, w) for w in traj])
        assert np.max(np.abs(energies - 0.225)) <= 1e-8

    def test_single_step_against_refined_flow(self, inertia, omega0):
        increment, substeps = reference_increment(inertia, omega0, 1e-3)
        assert substeps >= 2000
        npt.assert_allclose(rk4_step(inertia, omega0, 1e-3), omega0 + increment, atol=1e-13)

    def test_refined_flow_at_rest(self, diagonal_inertia, omega0):
        increment, substeps = reference_increment(diagonal_inertia, omega0, 0.1, substeps=10)
        npt.assert_array_equal(increment, np.zeros(3))
        assert substeps == 20

    def test_refinement_cap_raises(self, inertia, omega0):
        with pytest.raises(NonConvergence) as excinfo:
            reference_increment(inertia, omega0, 0.5, substeps=4, agreement=0.0, max_substeps=16)
        assert excinfo.value.iterations == 2
        assert excinfo.value.residual_norm > 0.0
        assert "16 substeps" in str(excinfo.value)

    def test_rk4_rejects_unconstrained(self, inertia):
        with pytest.raises(ConstraintError):
            rk4_step(inertia, [0.4, 0.5, 1e-6], 1e-3)


class TestReconstruction:
    def test_quarter_turn(self):
        expected = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
        npt.assert_allclose(reconstruct_step(np.eye(3), [2.0, 0.0, 0.0], 1.0), expected, atol=1e-15)
        npt.assert_allclose(reconstruct_step(np.eye(3), [4.0, 0.0, 0.0], 0.5), expected, atol=1e-15)

    def test_zero_velocity_keeps_attitude(self):
        R = Rotation.random(random_state=7).as_matrix()
        npt.assert_array_equal(reconstruct_step(R, np.zeros(3), 0.1), R)

    def test_attitude_rate(self, omega0):
        npt.assert_array_equal(attitude_rate(np.eye(3), omega0), hat_matrix(omega0))

    def test_unreduced_residual_on_rotations(self, rng):
        for R in Rotation.random(50, random_state=8).as_matrix():
            w = random_constrained(rng, 1)[0]
            assert abs(unreduced_constraint_residual(R, w, ConstraintCovector.canonical())) <= 1e-15

    def test_unreduced_residual_bound(self, rng):
        a = np.array([0.0, 0.0, 1.0])
        for R in Rotation.random(200, random_state=9).as_matrix():
            delta = rng.uniform(1e-8, 1e-2)
            E = rng.normal(size=(3, 3))
            E *= delta / entrywise_norm(E)
            w = random_constrained(rng, 1)[0]
            residual = unreduced_constraint_residual(R @ (np.eye(3) + E), w, a)
            assert abs(residual) <= (2 * delta + delta**2) * np.linalg.norm(w) + 1e-15
