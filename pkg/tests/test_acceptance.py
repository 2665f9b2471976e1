"""Acceptance criteria.

Each test checks one criterion at its stated tolerance and records a
``criterion N: PASS|FAIL`` line; the lines are echoed in the pytest terminal
summary and printed when this file is run as a script.
"""

import filecmp
import os
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, SX, SZ, random_system

from krylov_qfi import (
    build_weighted_space,
    exact_qfi,
    exact_sld,
    fn_series,
    gauss_quadrature,
    inner_product,
    kraus_seed,
    lanczos_from_moments,
    moments,
    qfi_by_quadrature,
    run_lanczos,
    spectral_measure,
    unitary_report,
    unitary_seed,
    validate_density_matrix,
)
from krylov_qfi.cli import main
from krylov_qfi.experiments import ExperimentConfig, run_ising_experiment
from krylov_qfi.spectral import chebyshev_rate, gapped_rate
from krylov_qfi.synthetic import coefficient_tail, fit_decay, make_gapped_measure, make_hard_edge_measure
from test_synthetic import jacobi_projection_error

SUITE_DIMS = (2, 4, 8)
SUITE_SIZE = 50


def record(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def suite():
    """50 random (rho, H) pairs at each of N = 2, 4, 8, in a fixed order."""
    for dim in SUITE_DIMS:
        for k in range(SUITE_SIZE):
            rho, ctx, H = random_system(dim, 10_000 * dim + k)
            yield dim, ctx, H


@pytest.fixture(scope="module")
def suite_runs():
    started = time.perf_counter()
    runs = []
    for dim, ctx, H in suite():
        O0, norm = unitary_seed(ctx, H)
        kres = run_lanczos(ctx, O0, dim * dim)
        runs.append((dim, ctx, H, O0, norm, kres, fn_series(kres.tridiag, norm)))
    return runs, time.perf_counter() - started


def test_criterion_1_oracle_equivalence(suite_runs):
    runs, elapsed = suite_runs
    worst = max(abs(f[-1] / exact_qfi(ctx, H) - 1) for _, ctx, H, _, _, _, f in runs)
    ok = worst <= 1e-9 and elapsed < 5.0
    record(1, ok, f"{len(runs)} pairs, max rel |F^(d0)/F - 1| = {worst:.2e} (tol 1e-9), {elapsed:.2f} s (< 5 s)")


def test_criterion_2_triangle_identity(suite_runs):
    runs, _ = suite_runs
    worst = 0.0
    for _, ctx, H, O0, norm, _, _ in runs:
        F = exact_qfi(ctx, H)
        L = exact_sld(ctx, H)
        sld_norm = inner_product(ctx, L, L).real
        measure = spectral_measure(ctx, O0.matrix / norm)
        atomic = norm**2 * measure.integrate(lambda x: x**-2.0)
        worst = max(worst, abs(sld_norm / F - 1), abs(atomic / F - 1))
    record(2, worst <= 1e-9, f"max rel deviation of <L,L> and |O0|^2 int lambda^-2 from F = {worst:.2e} (tol 1e-9)")


def test_criterion_3_monotone_lower_bounds(suite_runs):
    runs, _ = suite_runs
    bad_sign = bad_bound = 0
    for _, ctx, H, _, _, kres, galerkin in runs:
        F = exact_qfi(ctx, H)
        projection, _ = unitary_report(ctx, H)
        for series in (galerkin, projection.f_series):
            bad_sign += int(np.any(np.diff(series) < 0))
            bad_bound += int(np.any(series > F + 1e-12))
    ok = bad_sign == 0 and bad_bound == 0
    record(
        3,
        ok,
        f"Galerkin and projection series over {len(runs)} runs: {bad_sign} with a decrease, "
        f"{bad_bound} exceeding F + 1e-12",
    )


def test_criterion_4_tail_identity_and_depth_bound(suite_runs):
    runs, _ = suite_runs
    tail_gap = bound_excess = -np.inf
    galerkin_gap = 0.0
    for _, ctx, H, _, _, _, galerkin in runs:
        rep, _ = unitary_report(ctx, H)
        n = np.arange(1, rep.n + 1)
        tail_gap = max(tail_gap, np.max(np.abs(rep.rel_error - rep.tail)))
        bound_excess = max(bound_excess, np.max(rep.rel_error - rep.depth / n))
        galerkin_gap = max(galerkin_gap, np.max(np.abs((1 - galerkin / rep.f_exact) - rep.tail)))
    ok = tail_gap <= 1e-9 and bound_excess <= 1e-10
    record(
        4,
        ok,
        f"projection F^(n): max |1-F^(n)/F - tail| = {tail_gap:.2e} (tol 1e-9), "
        f"max (rel_error - D/n) = {bound_excess:.2e} (tol 1e-10); "
        f"[diagnostic] Galerkin F^(n) misses the tail identity by up to {galerkin_gap:.2e}",
    )


def test_criterion_5_route_equivalence():
    quad_gap = coef_gap = hankel_f_gap = 0.0
    double_gap, refused = 0.0, 0
    checked = 0
    for k in range(SUITE_SIZE):
        _, ctx, H = random_system(4, 50_000 + k)
        O0, norm = unitary_seed(ctx, H)
        kres = run_lanczos(ctx, O0, 16)
        T = kres.tridiag
        F = fn_series(T, norm)
        measure = spectral_measure(ctx, O0.matrix / norm)
        n_top = min(8, kres.d0)
        mu_ext = moments(measure, 2 * n_top, precision=40)
        mu_dbl = moments(measure, 2 * n_top)
        for n in range(1, n_top + 1):
            q = qfi_by_quadrature(gauss_quadrature(T.leading(n)), norm)
            quad_gap = max(quad_gap, abs(q / F[n - 1] - 1))
            Th = lanczos_from_moments(mu_ext, n, precision=40)
            coef_gap = max(coef_gap, np.max(np.abs(Th.a - T.a[:n])), np.max(np.abs(Th.b - T.b[: n - 1]), initial=0))
            hankel_f_gap = max(hankel_f_gap, abs(fn_series(Th, norm)[-1] / F[n - 1] - 1))
            try:
                Td = lanczos_from_moments(mu_dbl, n)
                double_gap = max(double_gap, np.max(np.abs(Td.a - T.a[:n])), np.max(np.abs(Td.b - T.b[: n - 1]), initial=0))
            except Exception:
                refused += 1
            checked += 1
    ok = quad_gap <= 1e-10 and hankel_f_gap <= 1e-10 and coef_gap <= 1e-7
    record(
        5,
        ok,
        f"{checked} (system, n) pairs at N=4, n <= min(8, d0): quadrature vs solve {quad_gap:.1e} (tol 1e-10), "
        f"F^(n) from Hankel coefficients {hankel_f_gap:.1e} (tol 1e-10), "
        f"Hankel coefficients vs Lanczos {coef_gap:.1e} (tol 1e-7); "
        f"[diagnostic] double-precision Hankel: worst {double_gap:.1e}, {refused} refused",
    )


def test_criterion_6_gapped_regime():
    started = time.perf_counter()
    measure = make_gapped_measure(1 / 3, 1.0, 500)
    _, rel = coefficient_tail(measure, 30)
    fit = fit_decay(rel, "exponential", (5, 25))
    elapsed = time.perf_counter() - started
    reference = 2 * gapped_rate(1 / 3)
    deviation = abs(fit.value - reference) / reference
    ok = deviation <= 0.20 and elapsed < 10
    record(
        6,
        ok,
        f"fitted rate {fit.value:.4f} vs 2*gamma = {reference:.4f}: deviation {deviation:.1%} (tol 20%), "
        f"{elapsed:.2f} s; [diagnostic] Chebyshev-ellipse rate 2*ln((sqrt(k)+1)/(sqrt(k)-1)) = "
        f"{2 * chebyshev_rate(1 / 3):.4f}",
    )


def test_criterion_7_hard_edge_regime():
    started = time.perf_counter()
    measure = make_hard_edge_measure(2.0, 2000)
    _, rel = coefficient_tail(measure, 40)
    fit = fit_decay(rel, "algebraic", (8, 40))
    elapsed = time.perf_counter() - started
    reference = 2 * 2.0 + 1
    deviation = abs(fit.value - reference) / reference
    oracle = fit_decay(jacobi_projection_error(2.0, 40), "algebraic", (8, 40)).value
    ok = deviation <= 0.15 and elapsed < 30
    record(
        7,
        ok,
        f"fitted exponent {fit.value:.4f} vs 2*alpha+1 = {reference:.0f}: deviation {deviation:.1%} (tol 15%), "
        f"{elapsed:.2f} s; [diagnostic] continuous lambda^2 density (Gauss-Jacobi) gives {oracle:.4f}",
    )


def test_criterion_8_ising_desk_scale(tmp_path):
    started = time.perf_counter()
    cfg = ExperimentConfig(
        experiment="ising",
        params={"length": 4, "J": 1.0, "g": -1.05, "h": 0.5},
        ensemble_size=20,
        rng_seed=0,
        max_n=150,
        output_dir=str(tmp_path),
    )
    rep = run_ising_experiment(cfg)
    elapsed = time.perf_counter() - started
    curve = np.array(rep.error_curve["mean_rel_error"])
    monotone = bool(np.all(np.diff(curve) <= 0))
    d0s = rep.d0_stats["values"]
    d0_ok = all(d is not None and d <= 120 for d in d0s)
    traces = [(np.mean(m_a), np.mean(m_b)) for m_a, m_b in _member_traces(rep)]
    mean_a = float(np.mean([t[0] for t in traces]))
    mean_b = float(np.mean([t[1] for t in traces]))
    hard = sum(c["kind"] == "hard-edge" for c in rep.classification)
    ok = monotone and d0_ok and mean_a > mean_b and hard >= 18 and elapsed < 120
    record(
        8,
        ok,
        f"L=4, 20 members: mean rel_error monotone={monotone}, d0 in [{min(d0s)}, {max(d0s)}] (<= 120), "
        f"mean a_k {mean_a:.4f} > mean b_k {mean_b:.4f}, HardEdge {hard}/20 (>= 18), {elapsed:.1f} s (< 120 s)",
    )


def _member_traces(rep):
    """Lanczos coefficients of every member, recomputed from its seed."""
    from krylov_qfi import IsingParams, ising_hamiltonian, random_density_matrix

    H = ising_hamiltonian(IsingParams(4))
    for member in rep.members:
        ctx = build_weighted_space(random_density_matrix(16, member["seed"]))
        O0, _ = unitary_seed(ctx, H)
        T = run_lanczos(ctx, O0, 150).tridiag
        yield T.a, T.b


@pytest.mark.slow
def test_criterion_8_extended_length_5(tmp_path, monkeypatch):
    monkeypatch.setenv("QFI_MAX_HILBERT_DIM", "32")
    cfg = ExperimentConfig(
        experiment="ising", params={"length": 5}, ensemble_size=20, rng_seed=0, max_n=600, output_dir=str(tmp_path)
    )
    rep = run_ising_experiment(cfg)
    d0s = rep.d0_stats["values"]
    curve = np.array(rep.error_curve["mean_rel_error"])
    monotone = bool(np.all(np.diff(curve) <= 0))
    bound = 32 * 31 // 2  # distinct off-diagonal weight pairs
    # d0 is measured here, not asserted; the run only has to complete
    ok = all(d is not None for d in d0s)
    record(
        "8",
        ok,
        f"[extended L=5, measured] d0 in [{min(d0s)}, {max(d0s)}] (N(N-1)/2 = {bound}), "
        f"mean rel_error monotone={monotone}",
    )


def dephasing(theta):
    K = [np.sqrt(1 - theta) * np.eye(2), np.sqrt(theta) * SZ]
    dK = [-0.5 / np.sqrt(1 - theta) * np.eye(2), 0.5 / np.sqrt(theta) * SZ]
    return K, dK


def test_criterion_9_kraus_seed():
    theta, delta = 0.3, 1e-6
    raw = 0.5 * (np.eye(2) + 0.8 * SX)
    rho0 = validate_density_matrix(raw)
    K, dK = dephasing(theta)
    rho_t, O0, _ = kraus_seed(rho0, K, dK)

    def channel(t):
        return sum(k @ raw @ k.conj().T for k in dephasing(t)[0])

    fd = (channel(theta + delta) - channel(theta - delta)) / (2 * delta)
    fd_gap = float(np.max(np.abs(rho_t.from_eigenbasis(O0.matrix) - fd)))

    unitary_gap = 0.0
    for k in range(10):
        rho, ctx, H = random_system(2, 90_000 + k)
        O_k = kraus_seed(rho, [np.eye(2)], [-1j * H])[1]
        O_u, _ = unitary_seed(ctx, H)
        unitary_gap = max(unitary_gap, float(np.max(np.abs(O_k.matrix - O_u.matrix))))
    ok = fd_gap <= 1e-8 and unitary_gap <= 1e-12
    record(9, ok, f"dephasing seed vs finite difference {fd_gap:.1e} (tol 1e-8), unitary channel vs unitary seed {unitary_gap:.1e} (tol 1e-12)")


def test_criterion_10_determinism(tmp_path):
    argv = ["ising", "--length", "3", "--ensemble", "5", "--seed", "77", "--max-n", "40", "--formats", "csv"]
    assert main(argv + ["--out", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "b")]) == 0
    names = sorted(os.listdir(tmp_path / "a"))
    _, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    ok = len(names) == 4 and not mismatch and not errors
    record(10, ok, f"{len(names)} CSV files from two identical runs, {len(mismatch)} differ")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
