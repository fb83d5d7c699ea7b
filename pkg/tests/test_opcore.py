import cmath

import numpy as np
import pytest
from scipy.stats import unitary_group

from gammakit import fixtures as fx
from gammakit.bipoly import classify_poly, eval_pair
from gammakit.decomp import bgamma_point, random_gamma_unitary
from gammakit.dilation import build_toeplitz_model, coefficient_scale, verify_annihilation_banded
from gammakit.errors import (
    GammaError,
    NotAContraction,
    NotNormal,
    NotUnitary,
    SpectralGapTooSmall,
)
from gammakit.geometry import symmetrize
from gammakit.models import CommutingPair, PairRole, PolyTag, RunConfig, Verdict, op_norm
from gammakit.opcore import (
    adjoint_pair,
    annihilating_pencil,
    certify_gamma_contraction,
    certify_gamma_unitary,
    defect,
    fundamental_operator,
    fundamental_witnesses,
    is_pure,
    joint_diagonalize,
    joint_eigenvalues,
    lstsq_fundamental,
    normal_fundamental_operator,
    numerical_radius,
    spectral_radius,
    split_pure_unitary,
    unitary_conjugate,
)

EXAMPLE_MATRIX = np.array([[0, 2, 0], [0, 0, 0], [0, 0, 1]], dtype=np.complex128)


def _normal_pair(rng: np.random.Generator, d: int, radius: float = 0.9) -> CommutingPair:
    z1 = radius * np.sqrt(rng.uniform(size=d)) * np.exp(2j * np.pi * rng.uniform(size=d))
    z2 = radius * np.sqrt(rng.uniform(size=d)) * np.exp(2j * np.pi * rng.uniform(size=d))
    U = unitary_group.rvs(d, random_state=rng) if d > 1 else np.eye(1)
    Uh = U.conj().T
    return CommutingPair.of(U @ np.diag(z1 + z2) @ Uh, U @ np.diag(z1 * z2) @ Uh, ctol=1e-10)


def _direct_sum(a: CommutingPair, b: CommutingPair) -> CommutingPair:
    da, db = a.dim, b.dim
    S = np.zeros((da + db, da + db), dtype=np.complex128)
    P = np.zeros_like(S)
    S[:da, :da], S[da:, da:] = a.S, b.S
    P[:da, :da], P[da:, da:] = a.P, b.P
    return CommutingPair.of(S, P, ctol=1e-10)


class TestRadii:
    def test_numerical_radius_of_unit_eigenvalue_matrix(self) -> None:
        assert numerical_radius(EXAMPLE_MATRIX) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("c", [0.5, 1.0, 1.9])
    def test_numerical_radius_of_nilpotent(self, c: float) -> None:
        assert numerical_radius(fx.nilpotent_pencil_matrix(c)) == pytest.approx(c / 2, abs=1e-9)

    def test_numerical_radius_of_identity(self) -> None:
        assert numerical_radius(np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_numerical_radius_rejects_bad_input(self) -> None:
        with pytest.raises(ValueError, match="square"):
            numerical_radius(np.zeros((2, 3)))
        with pytest.raises(ValueError, match="grid"):
            numerical_radius(np.eye(2), grid=8)

    def test_classical_inequalities(self, rng: np.random.Generator) -> None:
        for _ in range(20):
            T = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            omega = numerical_radius(T)
            assert spectral_radius(T) <= omega + 1e-9
            assert omega <= op_norm(T) + 1e-9
            assert op_norm(T) <= 2 * omega + 1e-9

    def test_spectral_radius(self) -> None:
        assert spectral_radius(EXAMPLE_MATRIX) == pytest.approx(1.0)
        assert spectral_radius(np.eye(4, k=-1)) == 0.0
        assert spectral_radius((0.3 - 0.4j) * np.eye(2)) == pytest.approx(0.5)


class TestDefect:
    def test_scaled_identity(self) -> None:
        dd = defect(0.25 * np.eye(3))
        np.testing.assert_allclose(dd.D, np.sqrt(1 - 0.5**4) * np.eye(3), atol=1e-14)
        assert dd.rank == 3

    def test_unitary_has_empty_frame(self) -> None:
        dd = defect(np.diag(np.exp([0.3j, 1.7j])))
        np.testing.assert_allclose(dd.D, 0, atol=1e-12)
        assert dd.rank == 0

    def test_zero_has_identity_defect(self) -> None:
        dd = defect(np.zeros((2, 2)))
        np.testing.assert_allclose(dd.D, np.eye(2), atol=1e-14)

    def test_rounding_above_one_is_clamped(self) -> None:
        dd = defect(np.diag([1 + 1e-11, 0.5]))
        assert dd.rank == 1
        assert np.all(dd.eigs >= 0)

    def test_rejects_expansion(self) -> None:
        with pytest.raises(NotAContraction):
            defect(np.diag([1.01, 0.5]))


class TestFundamentalOperator:
    def test_scaled_identity(self, scaled_identity_pair: CommutingPair) -> None:
        solve = fundamental_operator(scaled_identity_pair)
        np.testing.assert_allclose(solve.lifted, 0.8 * np.eye(3), atol=1e-10)
        assert solve.residual <= 1e-12
        assert solve.omega == pytest.approx(0.8)

    def test_zero_pair(self) -> None:
        solve = fundamental_operator(CommutingPair.of(np.zeros((2, 2)), np.zeros((2, 2))))
        np.testing.assert_allclose(solve.A, 0, atol=1e-15)

    def test_unit_eigenvalue_pair(self, unit_eigenvalue_pair: CommutingPair) -> None:
        solve = fundamental_operator(unit_eigenvalue_pair)
        np.testing.assert_allclose(solve.lifted, EXAMPLE_MATRIX, atol=1e-12)
        assert solve.omega == pytest.approx(1.0, abs=1e-9)

    def test_matches_dense_least_squares(self) -> None:
        for seed in range(100):
            pair = fx.random_pure_gamma_contraction(1 + seed % 3, seed)
            solve = fundamental_operator(pair)
            np.testing.assert_allclose(solve.A, lstsq_fundamental(pair), atol=1e-9)

    def test_matches_normal_closed_form(self, rng: np.random.Generator) -> None:
        for d in (1, 2, 4):
            pair = _normal_pair(rng, d)
            solve = fundamental_operator(pair)
            np.testing.assert_allclose(solve.lifted, normal_fundamental_operator(pair), atol=1e-8)

    def test_normal_closed_form_preconditions(self) -> None:
        with pytest.raises(NotNormal):
            normal_fundamental_operator(
                CommutingPair.of(np.eye(2, k=-1), np.zeros((2, 2)))
            )
        with pytest.raises(NotAContraction):
            normal_fundamental_operator(CommutingPair.of(2 * np.eye(2), np.eye(2)))

    def test_witnesses(self, scaled_identity_pair: CommutingPair) -> None:
        data = fundamental_witnesses(fundamental_operator(scaled_identity_pair))
        assert data["spectralRadius"] == pytest.approx(0.8)
        assert len(data["eigenvalues"]) == 3


class TestCertifyGammaContraction:
    def test_unit_eigenvalue_pair_passes(
        self, unit_eigenvalue_pair: CommutingPair, cfg: RunConfig
    ) -> None:
        cert = certify_gamma_contraction(unit_eigenvalue_pair, cfg)
        assert cert.verdict is Verdict.PASS
        assert cert.witnesses["spectralRadiusA"] == pytest.approx(1.0)

    def test_scaled_identity_passes(self, scaled_identity_pair: CommutingPair) -> None:
        assert certify_gamma_contraction(scaled_identity_pair).passed

    def test_truncated_shift_passes(self) -> None:
        assert certify_gamma_contraction(fx.truncated_shift_pair()).passed

    def test_large_sum_fails(self) -> None:
        cert = certify_gamma_contraction(CommutingPair.of(3 * np.eye(2), np.zeros((2, 2))))
        assert cert.verdict is Verdict.FAIL
        assert "norm_S" in cert.failed_checks()

    def test_expanding_product_skips_fundamental_equation(self) -> None:
        cert = certify_gamma_contraction(CommutingPair.of(np.eye(2), 1.5 * np.eye(2)))
        assert "norm_P" in cert.failed_checks()
        assert "skipped" in cert.notes

    def test_point_outside_gamma_fails_through_omega(self) -> None:
        # (1.5, -0.9) passes both norm checks but lies outside Gamma.
        pair = CommutingPair.of(1.5 * np.eye(1), -0.9 * np.eye(1))
        cert = certify_gamma_contraction(pair)
        assert cert.failed_checks() == ["omega_A"]

    def test_residual_threshold_follows_tol(self) -> None:
        # (1 + i delta, 1) misses the distinguished boundary by 2 delta on ker D_P.
        delta = 7.5e-9
        pair = CommutingPair.of(np.diag([1 + 1j * delta, 0.5]), np.diag([1.0, 0.0]))
        strict = certify_gamma_contraction(pair, RunConfig(tol=1e-9))
        assert strict.failed_checks() == ["fundamental_residual"]
        loose = certify_gamma_contraction(pair, RunConfig(tol=1e-7))
        assert loose.passed

    def test_images_of_commuting_contractions_pass(self) -> None:
        for seed in range(200):
            pair = fx.random_pure_gamma_contraction(1 + seed % 5, seed)
            cert = certify_gamma_contraction(pair)
            assert cert.passed, cert.failed_checks()
            solve = fundamental_operator(pair)
            assert solve.residual <= 1e-8
            assert solve.omega <= 1 + 1e-8


class TestCertifyGammaUnitary:
    def test_point_two_one(self) -> None:
        assert certify_gamma_unitary(CommutingPair.of(2 * np.eye(2), np.eye(2))).passed

    def test_interior_product_fails(self) -> None:
        cert = certify_gamma_unitary(CommutingPair.of(np.zeros((2, 2)), 0.5 * np.eye(2)))
        assert cert.failed_checks() == ["joint_spectrum_in_bGamma"]

    def test_non_normal_fails_early(self) -> None:
        cert = certify_gamma_unitary(CommutingPair.of(np.eye(2, k=-1), np.zeros((2, 2))))
        assert "normal_S" in cert.failed_checks()
        assert "jointEigenvalues" not in cert.witnesses

    def test_diagonal_unitaries(self, rng: np.random.Generator) -> None:
        u1 = np.exp(2j * np.pi * rng.uniform(size=5))
        u2 = np.exp(2j * np.pi * rng.uniform(size=5))
        pair = CommutingPair.of(np.diag(u1 + u2), np.diag(u1 * u2))
        cert = certify_gamma_unitary(pair)
        assert cert.passed
        assert len(cert.witnesses["jointEigenvalues"]) == 5

    def test_random_gamma_unitary(self, two_factor_unitary: CommutingPair) -> None:
        assert two_factor_unitary.role is PairRole.GAMMA_UNITARY
        assert certify_gamma_unitary(two_factor_unitary).passed


class TestJointSpectrum:
    def test_joint_diagonalize_recovers_points(self) -> None:
        points = [bgamma_point(0.2, 1.1), bgamma_point(-0.7, 2.0), bgamma_point(3.0, 0.4)]
        pair = random_gamma_unitary([(pt, 1) for pt in points], seed=5)
        Q, s, p = joint_diagonalize(pair)
        np.testing.assert_allclose(Q.conj().T @ Q, np.eye(3), atol=1e-12)
        for pt in points:
            assert np.min(np.abs(s - pt.s) + np.abs(p - pt.p)) <= 1e-8

    def test_joint_eigenvalues_of_triangular_pair(self, rng: np.random.Generator) -> None:
        t = np.array([0.1, 0.3 + 0.2j, -0.4])
        T1 = np.diag(t) + np.triu(rng.normal(size=(3, 3)), 1)
        pair = CommutingPair.of(T1 + T1 @ T1, T1 @ T1 @ T1)
        found = joint_eigenvalues(pair)
        for lam in t:
            expected = symmetrize(lam, lam * lam)
            assert min(abs(pt.s - expected.s) + abs(pt.p - expected.p) for pt in found) <= 1e-8

    def test_empty_pair(self) -> None:
        assert joint_eigenvalues(CommutingPair.of(np.zeros((0, 0)), np.zeros((0, 0)))) == []


class TestPurity:
    def test_scaled_identity_is_pure(self) -> None:
        assert is_pure(0.25 * np.eye(2))

    def test_unitary_is_not_pure(self) -> None:
        assert not is_pure(np.diag(np.exp([0.5j, 2j])))

    def test_nilpotent_is_pure(self) -> None:
        assert is_pure(np.eye(4, k=-1))

    def test_rejects_expansion(self) -> None:
        with pytest.raises(NotAContraction):
            is_pure(2 * np.eye(2))


class TestSplitPureUnitary:
    def _mixed(self, rng: np.random.Generator) -> tuple[CommutingPair, complex, complex]:
        inner = symmetrize(0.5, 0.2)
        outer = symmetrize(cmath.exp(0.4j), cmath.exp(-1.3j))
        U = unitary_group.rvs(2, random_state=rng)
        Uh = U.conj().T
        pair = CommutingPair.of(
            U @ np.diag([inner.s, outer.s]) @ Uh, U @ np.diag([inner.p, outer.p]) @ Uh, ctol=1e-10
        )
        return pair, inner.p, outer.p

    def test_splits_mixed_pair(self, rng: np.random.Generator) -> None:
        pair, inner_p, outer_p = self._mixed(rng)
        pure, unitary, pure_basis, unitary_basis = split_pure_unitary(pair)
        assert (pure.dim, unitary.dim) == (1, 1)
        assert pure.P[0, 0] == pytest.approx(inner_p)
        assert unitary.P[0, 0] == pytest.approx(outer_p)
        assert pure.role is PairRole.GAMMA_CONTRACTION
        assert unitary.role is PairRole.GAMMA_UNITARY
        Qp, Qu = pure_basis.frame, unitary_basis.frame
        np.testing.assert_allclose(Qp.conj().T @ Qu, 0, atol=1e-12)
        rebuilt = Qp @ pure.S @ Qp.conj().T + Qu @ unitary.S @ Qu.conj().T
        np.testing.assert_allclose(rebuilt, pair.S, atol=1e-10)
        assert certify_gamma_unitary(unitary).passed

    def test_unitary_pair_has_empty_pure_part(self, two_factor_unitary: CommutingPair) -> None:
        pure, unitary, _, _ = split_pure_unitary(two_factor_unitary)
        assert pure.dim == 0
        assert unitary.dim == two_factor_unitary.dim

    def test_pure_pair_has_empty_unitary_part(self, scaled_identity_pair: CommutingPair) -> None:
        pure, unitary, _, _ = split_pure_unitary(scaled_identity_pair)
        assert (pure.dim, unitary.dim) == (3, 0)

    def test_rejects_eigenvalue_in_gap_band(self) -> None:
        P = np.diag([1 - 1e-7, 0.2])
        with pytest.raises(SpectralGapTooSmall):
            split_pure_unitary(CommutingPair.of(np.diag([1.0, 0.1]), P))

    def test_rejects_expansion(self) -> None:
        with pytest.raises(NotAContraction):
            split_pure_unitary(CommutingPair.of(np.eye(2), 2 * np.eye(2)))

    def test_rejects_coupled_blocks(self) -> None:
        S = np.array([[0, 1], [0, 0]], dtype=np.complex128)
        P = np.diag([0.5, 1.0]).astype(np.complex128)
        pair = CommutingPair(S=S, P=P, commutator_norm=0.0)
        with pytest.raises(GammaError, match="coupled"):
            split_pure_unitary(pair)


class TestUnitaryConjugate:
    def test_identity(self, scaled_identity_pair: CommutingPair) -> None:
        same = unitary_conjugate(scaled_identity_pair, np.eye(3))
        np.testing.assert_array_equal(same.S, scaled_identity_pair.S)

    def test_intertwines_polynomials(self, rng: np.random.Generator) -> None:
        pair = fx.random_pure_gamma_contraction(3, 4)
        U = unitary_group.rvs(3, random_state=rng)
        moved = unitary_conjugate(pair, U)
        q = fx.diagonal_poly() * fx.blaschke_line()
        np.testing.assert_allclose(
            eval_pair(q, moved, ctol=1e-8),
            U.conj().T @ eval_pair(q, pair) @ U,
            atol=1e-9,
        )
        assert certify_gamma_contraction(moved).verdict is certify_gamma_contraction(pair).verdict

    def test_rejects_non_unitary(self, scaled_identity_pair: CommutingPair) -> None:
        with pytest.raises(NotUnitary):
            unitary_conjugate(scaled_identity_pair, 2 * np.eye(3))
        with pytest.raises(NotUnitary):
            unitary_conjugate(scaled_identity_pair, np.eye(2))


class TestAnnihilatingPencil:
    def test_annihilates_pure_pairs(self) -> None:
        for seed in range(100):
            pair = fx.random_pure_gamma_contraction(1 + seed % 3, seed)
            q = annihilating_pencil(pair)
            residual = op_norm(eval_pair(q, pair, ctol=1e-8))
            assert residual <= 1e-7 * coefficient_scale(q, pair)

    def test_pure_pencil_is_gamma_distinguished_and_annihilates_its_model(self) -> None:
        checked = 0
        for seed in range(100):
            pair = fx.random_pure_gamma_contraction(1 + seed % 3, seed)
            F = fundamental_operator(adjoint_pair(pair)).A
            if spectral_radius(F) > 0.9 or numerical_radius(F) > 0.95:
                continue
            q = annihilating_pencil(pair)
            assert classify_poly(q).tag is PolyTag.GAMMA_DISTINGUISHED
            tm = build_toeplitz_model(F.conj().T, F, 8)
            assert verify_annihilation_banded(tm, q, 8 - q.total_degree, tol=1e-8).passed
            checked += 1
        assert checked >= 20

    def test_annihilates_scaled_identity_with_blaschke_line(
        self, scaled_identity_pair: CommutingPair
    ) -> None:
        q = annihilating_pencil(scaled_identity_pair)
        line = fx.blaschke_line()
        assert q.equal_up_to_scalar(line * line * line, tol=1e-8)

    def test_annihilates_mixed_pairs(self) -> None:
        unitary = random_gamma_unitary(
            [(bgamma_point(0.3, 1.9), 1), (bgamma_point(-1.0, 2.5), 2)], seed=3
        )
        pair = _direct_sum(fx.random_pure_gamma_contraction(2, 9), unitary)
        q = annihilating_pencil(pair)
        residual = op_norm(eval_pair(q, pair, ctol=1e-8))
        assert residual <= 1e-7 * coefficient_scale(q, pair)
