import numpy as np
import pytest
from conftest import SX, SZ, random_system

from krylov_qfi import (
    error_report,
    exact_qfi,
    exact_sld,
    inner_product,
    krylov_coefficients,
    krylov_distribution,
    run_lanczos,
    seed_report,
    unitary_report,
    unitary_seed,
)
from krylov_qfi.exceptions import IdentityViolationError, IncompleteKrylovError, ZeroVectorError
from krylov_qfi.qfi import (
    QfiReport,
    projected_coefficients,
    projection_series,
    resolvent_moment,
    resolvent_solution,
)


class TestExact:
    def test_qubit(self, qubit):
        _, ctx = qubit
        assert exact_qfi(ctx, SX) == pytest.approx(1.0, rel=1e-15)

    def test_commuting(self, qubit):
        _, ctx = qubit
        assert exact_qfi(ctx, SZ) == 0.0

    def test_resolvent_moment_oracle(self):
        _, ctx, H = random_system(4, 31)
        O0, norm = unitary_seed(ctx, H)
        v0 = O0.matrix / norm
        # <v0, K^-2 v0> = sum w |v0|^2 / w^2
        second_inverse = np.sum(np.abs(v0) ** 2 / ctx.weights)
        assert exact_qfi(ctx, H) == pytest.approx(norm**2 * second_inverse, rel=1e-11)

    def test_generic_formula_against_eigendecomposition(self):
        # textbook form 2 sum (p_a - p_b)^2 / (p_a + p_b) |H_ab|^2, computed from scratch
        rho, ctx, H = random_system(5, 32)
        p, U = np.linalg.eigh(rho.matrix)
        Hab = U.conj().T @ H @ U
        F = 0.0
        for a in range(5):
            for b in range(5):
                F += 2 * (p[a] - p[b]) ** 2 / (p[a] + p[b]) * abs(Hab[a, b]) ** 2
        assert exact_qfi(ctx, H) == pytest.approx(F, rel=1e-12)


class TestSld:
    def test_qubit(self, qubit):
        _, ctx = qubit
        L = exact_sld(ctx, SX)
        np.testing.assert_allclose(L.matrix, [[0, 1j], [-1j, 0]])
        assert inner_product(ctx, L, L).real == pytest.approx(1.0)

    def test_commuting(self, qubit):
        _, ctx = qubit
        assert np.all(exact_sld(ctx, SZ).matrix == 0)

    def test_defining_equation(self):
        rho, ctx, H = random_system(4, 33)
        L = rho.from_eigenbasis(exact_sld(ctx, H).matrix)
        lhs = 0.5 * (rho.matrix @ L + L @ rho.matrix)
        rhs = 1j * (rho.matrix @ H - H @ rho.matrix)
        assert np.max(np.abs(lhs - rhs)) <= 1e-11 * np.max(np.abs(rhs))
        np.testing.assert_allclose(L, L.conj().T, atol=1e-13)

    def test_norm_is_qfi(self):
        _, ctx, H = random_system(6, 34)
        L = exact_sld(ctx, H)
        assert inner_product(ctx, L, L).real == pytest.approx(exact_qfi(ctx, H), rel=1e-11)


class TestCoefficients:
    def test_qubit(self, qubit):
        _, ctx = qubit
        O0, _ = unitary_seed(ctx, SX)
        np.testing.assert_allclose(krylov_coefficients(run_lanczos(ctx, O0, 4)), [1.0])

    def test_parseval_and_projection_oracle(self):
        _, ctx, H = random_system(4, 35)
        O0, _ = unitary_seed(ctx, H)
        kres = run_lanczos(ctx, O0, 16, store_basis=True)
        ell = krylov_coefficients(kres)
        assert np.sum(ell**2) == pytest.approx(exact_qfi(ctx, H), rel=1e-9)
        oracle = projected_coefficients(ctx, kres, exact_sld(ctx, H))
        np.testing.assert_allclose(ell, oracle, atol=1e-9 * np.max(np.abs(ell)))

    def test_sld_reconstruction_residual(self):
        rho, ctx, H = random_system(4, 36)
        O0, _ = unitary_seed(ctx, H)
        kres = run_lanczos(ctx, O0, 16, store_basis=True)
        ell = krylov_coefficients(kres)
        L = rho.from_eigenbasis(np.tensordot(ell, kres.basis, axes=1))
        lhs = 0.5 * (rho.matrix @ L + L @ rho.matrix)
        rhs = 1j * (rho.matrix @ H - H @ rho.matrix)
        assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)

    def test_eigen_seed_single_entry(self):
        _, ctx, _ = random_system(3, 37)
        seed = np.zeros((3, 3), dtype=complex)
        seed[0, 2] = 1.0
        ell = krylov_coefficients(run_lanczos(ctx, seed, 9))
        assert ell.size == 1 and ell[0] != 0

    def test_incomplete(self):
        _, ctx, H = random_system(4, 38)
        O0, _ = unitary_seed(ctx, H)
        with pytest.raises(IncompleteKrylovError):
            krylov_coefficients(run_lanczos(ctx, O0, 2))


class TestDistribution:
    @pytest.mark.parametrize(
        "ell, p, D",
        [([1.0], [1.0], 0.0), ([1.0, 1.0], [0.5, 0.5], 0.5), ([0.0, 0.0, 3.0], [0, 0, 1], 2.0)],
    )
    def test_examples(self, ell, p, D):
        got_p, got_D = krylov_distribution(ell)
        np.testing.assert_allclose(got_p, p)
        assert got_D == pytest.approx(D)

    def test_zero(self):
        with pytest.raises(ZeroVectorError):
            krylov_distribution([0.0, 0.0])


class TestErrorReport:
    def test_single_level(self):
        rep = error_report([1.0], [1.0], 1.0)
        np.testing.assert_allclose(rep.rel_error, [0.0])
        np.testing.assert_allclose(rep.bound_margin, [0.0])

    def test_bound_is_tight_for_two_equal_levels(self):
        ell = np.array([1.0, 1.0])
        rep = error_report(projection_series(ell), ell, 2.0)
        assert rep.rel_error[0] == pytest.approx(0.5)
        assert rep.depth == pytest.approx(0.5)
        assert rep.bound_margin[0] == pytest.approx(0.0)

    def test_identity_violation(self):
        ell = np.array([1.0, 1.0])
        with pytest.raises(IdentityViolationError):
            error_report([1.0, 1.5], ell, 2.0)

    def test_needs_positive_f(self):
        with pytest.raises(ValueError):
            error_report([0.0], [0.0], 0.0)

    def test_random_member(self):
        _, ctx, H = random_system(4, 39)
        rep, kres = unitary_report(ctx, H)
        assert rep.d0 == kres.d0 and rep.n == kres.d0
        assert abs(np.sum(rep.p) - 1) <= 1e-10 and np.all(rep.p >= 0)
        np.testing.assert_allclose(rep.rel_error, rep.tail, atol=1e-9)
        assert np.all(rep.bound_margin >= -1e-10)
        assert 0 <= rep.depth <= kres.d0 - 1
        assert np.all(np.diff(rep.rel_error) <= 0)

    def test_galerkin_series_attached(self):
        _, ctx, H = random_system(4, 40)
        rep, _ = unitary_report(ctx, H)
        F = rep.f_exact
        assert rep.f_galerkin[-1] == pytest.approx(F, rel=1e-9)
        assert rep.f_series[-1] == pytest.approx(F, rel=1e-9)
        # both are lower bounds; the projection one is never the worse of the two
        assert np.all(rep.f_galerkin <= rep.f_series + 1e-12 * F)

    def test_dict_round_trip(self):
        _, ctx, H = random_system(3, 41)
        rep, _ = unitary_report(ctx, H)
        back = QfiReport.from_dict(rep.to_dict())
        for name in ("f_series", "ell", "p", "rel_error", "tail", "bound_margin", "f_galerkin"):
            np.testing.assert_array_equal(getattr(back, name), getattr(rep, name))
        assert back.f_exact == rep.f_exact and back.d0 == rep.d0


class TestSeedReport:
    def test_truncated_run_uses_projected_coefficients(self):
        _, ctx, H = random_system(4, 42)
        full, _ = unitary_report(ctx, H)
        part, kres = unitary_report(ctx, H, max_n=3)
        assert kres.d0 is None and kres.basis is None
        np.testing.assert_allclose(part.f_series, full.f_series[:3], rtol=1e-10)
        np.testing.assert_allclose(part.rel_error, full.rel_error[:3], atol=1e-12)
        assert np.isnan(part.depth)

    def test_arbitrary_seed_is_a_resolvent_moment(self):
        _, ctx, _ = random_system(3, 43)
        rng = np.random.default_rng(0)
        seed = rng.standard_normal((3, 3))
        seed = seed + seed.T  # Hermitian with a diagonal
        rep, _ = seed_report(ctx, seed, kind="resolvent_moment")
        assert rep.kind == "resolvent_moment"
        assert rep.f_exact == pytest.approx(resolvent_moment(ctx, seed))
        assert rep.f_series[-1] == pytest.approx(rep.f_exact, rel=1e-9)
        np.testing.assert_allclose(resolvent_solution(ctx, seed).matrix * ctx.weights, seed)

    def test_store_basis_passthrough(self):
        _, ctx, H = random_system(3, 44)
        _, kres = unitary_report(ctx, H, store_basis=True)
        assert kres.basis is not None and kres.basis.shape[0] == kres.n
