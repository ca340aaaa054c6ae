import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skyrmion_transfer import tomography as tomo
from skyrmion_transfer.channels import isotropic_mix
from skyrmion_transfer.correlations import fidelity_pure, purity
from skyrmion_transfer.states import SkyrmionSpec, nonlocal_target
from skyrmion_transfer.tensor import OAM_A, POL_B, DensityOperator
from skyrmion_transfer.texture import TransverseGrid, mode_pair, skyrmion_number, stokes_nonlocal

from conftest import random_density

PSI = nonlocal_target(SkyrmionSpec(2))
SETTINGS = tomo.settings_two_qubit()


def trace_distance(a, b):
    return 0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum()


def simplex_projection_oracle(m):
    """Closest unit-trace PSD matrix: project the spectrum onto the probability simplex (sort and threshold)."""
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u - (css - 1) / np.arange(1, len(u) + 1) > 0)[0][-1]
    theta = (css[k] - 1) / (k + 1)
    return (v * np.clip(w - theta, 0, None)) @ v.conj().T


def test_settings():
    assert len(SETTINGS) == 36
    assert len({(s.basis_a, s.eig_a, s.basis_b, s.eig_b) for s in SETTINGS}) == 36
    assert np.linalg.matrix_rank(tomo.measurement_matrix(SETTINGS)) == 16


def test_each_side_resolves_three_identities():
    sides_a = {(s.basis_a, s.eig_a): s.projector_a for s in SETTINGS}
    sides_b = {(s.basis_b, s.eig_b): s.projector_b for s in SETTINGS}
    for side in (sides_a, sides_b):
        assert len(side) == 6
        np.testing.assert_allclose(sum(side.values()), 3 * np.eye(2), atol=1e-15)


def test_projectors_rank_one_and_idempotent():
    for s in SETTINGS:
        for p in (s.projector_a, s.projector_b, s.projector()):
            np.testing.assert_allclose(p @ p, p, atol=1e-12)
            assert np.linalg.matrix_rank(p, tol=1e-9) == 1


def test_setting_validation():
    with pytest.raises(ValueError):
        tomo.MeasurementSetting("W", 1, "Z", 1)
    with pytest.raises(ValueError):
        tomo.CountRecord(SETTINGS[0], -1.0, 10.0)


def test_born_rule_counts():
    rec = tomo.simulate_counts(PSI, SETTINGS, 1e5, exact=True)
    zz = next(r for r in rec if (r.setting.basis_a, r.setting.eig_a, r.setting.basis_b, r.setting.eig_b) == ("Z", 1, "Z", 1))
    assert zz.counts == pytest.approx(5e4, abs=1e-9)


@pytest.mark.parametrize("b", [0.0, 0.05, 0.2])
def test_background_adds_uniformly(b):
    rec = tomo.simulate_counts(isotropic_mix(PSI.density(), 0.3), SETTINGS, 1e4, background_rate=b, exact=True)
    for pair in {r.setting.basis_pair for r in rec}:
        total = sum(r.counts for r in rec if r.setting.basis_pair == pair)
        assert total == pytest.approx(1e4 * (1 + 4 * b), rel=1e-12)


def test_counts_deterministic_under_seed():
    a = tomo.simulate_counts(PSI, SETTINGS, 1e4, 0.1, seed=9)
    b = tomo.simulate_counts(PSI, SETTINGS, 1e4, 0.1, seed=9)
    c = tomo.simulate_counts(PSI, SETTINGS, 1e4, 0.1, seed=10)
    assert [r.counts for r in a] == [r.counts for r in b]
    assert [r.counts for r in a] != [r.counts for r in c]


def test_exposure_must_be_positive():
    with pytest.raises(ValueError):
        tomo.simulate_counts(PSI, SETTINGS, 0)


def test_linear_inversion_exact():
    truth = isotropic_mix(PSI.density(), 0.4)
    res = tomo.reconstruct_linear(tomo.simulate_counts(truth, SETTINGS, 1e5, exact=True))
    np.testing.assert_allclose(res.rho.entries, truth.entries, atol=1e-10)
    assert not res.physical_projection_applied


def test_flat_counts_give_maximally_mixed():
    rec = [tomo.CountRecord(s, 250.0, 1000.0) for s in SETTINGS]
    np.testing.assert_allclose(tomo.reconstruct_linear(rec).rho.entries, np.eye(4) / 4, atol=1e-14)


def test_incomplete_settings_rejected():
    zz_only = [s for s in SETTINGS if s.basis_pair == ("Z", "Z")]
    rec = tomo.simulate_counts(PSI, zz_only, 1e4, exact=True)
    with pytest.raises(tomo.TomographyError):
        tomo.reconstruct_linear(rec)


def test_finite_count_linear_inversion():
    rec = tomo.simulate_counts(isotropic_mix(PSI.density(), 0.2), SETTINGS, 1e5, seed=3)
    res = tomo.reconstruct_linear(rec)
    assert trace_distance(res.rho.entries, isotropic_mix(PSI.density(), 0.2).entries) < 0.02


def test_project_physical_examples():
    truth = isotropic_mix(PSI.density(), 0.3)
    np.testing.assert_allclose(tomo.project_physical(truth.entries).entries, truth.entries, atol=1e-12)
    np.testing.assert_allclose(tomo.project_physical(np.eye(4) / 4).entries, np.eye(4) / 4, atol=1e-15)
    out = tomo.project_physical(np.diag([1.1, 0.1, -0.1, -0.1]))
    np.testing.assert_allclose(out.entries, np.diag([1.0, 0, 0, 0]), atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 0.5))
def test_project_physical_matches_simplex_oracle(seed, size):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    m = random_density(rng).entries + size * (g + g.conj().T)
    m = m - (np.trace(m).real - 1) * np.eye(4) / 4
    got = tomo.project_physical(m)
    np.testing.assert_allclose(got.entries, simplex_projection_oracle(m), atol=1e-10)
    np.testing.assert_allclose(tomo.project_physical(got.entries).entries, got.entries, atol=1e-12)


@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 4]))
def test_exact_round_trip(seed, rank):
    truth = random_density(np.random.default_rng(seed), rank=rank)
    res = tomo.reconstruct(tomo.simulate_counts(truth, SETTINGS, 1e5, exact=True))
    np.testing.assert_allclose(res.rho.entries, truth.entries, atol=1e-8)


@settings(max_examples=15)
@given(st.integers(0, 2**32 - 1), st.floats(0, 0.2), st.sampled_from(tomo.MLE_METHODS))
def test_likelihood_never_decreases(seed, b, method):
    truth = random_density(np.random.default_rng(seed), rank=2)
    rec = tomo.simulate_counts(truth, SETTINGS, 2e3, background_rate=b, seed=seed)
    res = tomo.reconstruct(rec, method=method)
    assert np.all(np.diff(res.loglik_history) >= 0)


@given(st.integers(0, 2**32 - 1), st.floats(0, 0.2), st.sampled_from([1, 2, 4]))
def test_projected_gradient_certifies_optimum(seed, b, rank):
    truth = random_density(np.random.default_rng(seed), rank=rank)
    rec = tomo.simulate_counts(truth, SETTINGS, 2e3, background_rate=b, seed=seed)
    assert tomo.reconstruct(rec, method="projected_gradient").converged


def test_mle_on_ideal_state():
    rec = tomo.simulate_counts(PSI, SETTINGS, 1e5, seed=11)
    res = tomo.reconstruct(rec)
    assert fidelity_pure(PSI, res.rho) >= 0.99
    assert res.loglik >= tomo.reconstruct_linear(rec).loglik - 1e-9


def test_mle_zero_iterations_returns_initial():
    initial = isotropic_mix(PSI.density(), 0.5)
    rec = tomo.simulate_counts(PSI, SETTINGS, 1e3, seed=1)
    res = tomo.mle_refine(rec, initial, max_iter=0)
    np.testing.assert_array_equal(res.rho.entries, initial.entries)
    assert res.iterations == 0 and not res.converged


def test_mle_iteration_cap_flags_non_convergence():
    rec = tomo.simulate_counts(isotropic_mix(PSI.density(), 0.3), SETTINGS, 1e5, seed=1)
    res = tomo.mle_refine(rec, DensityOperator.maximally_mixed((OAM_A, POL_B)), max_iter=3)
    assert not res.converged and res.iterations == 3


def test_monte_carlo_trace_functional():
    rec = tomo.simulate_counts(PSI, SETTINGS, 1e4, seed=2)
    mean, std = tomo.monte_carlo_uncertainty(rec, lambda r: np.trace(r.entries).real, M=10, seed=0)
    assert mean == pytest.approx(1.0, abs=1e-12)
    assert std == pytest.approx(0.0, abs=1e-12)


def test_monte_carlo_needs_ten_replicas():
    rec = tomo.simulate_counts(PSI, SETTINGS, 1e4, seed=2)
    with pytest.raises(ValueError):
        tomo.monte_carlo_uncertainty(rec, purity, M=5)


def test_monte_carlo_is_deterministic():
    rec = tomo.simulate_counts(isotropic_mix(PSI.density(), 0.2), SETTINGS, 1e4, seed=2)
    f = lambda r: fidelity_pure(PSI, r)  # noqa: E731
    assert tomo.monte_carlo_uncertainty(rec, f, M=10, seed=4) == tomo.monte_carlo_uncertainty(rec, f, M=10, seed=4)


def test_monte_carlo_skyrmion_number_on_high_count_data():
    grid, modes = TransverseGrid(96, 6.0), mode_pair(2)
    rec = tomo.simulate_counts(PSI, SETTINGS, 1e5, seed=5)
    mean, std = tomo.monte_carlo_uncertainty(
        rec, lambda r: skyrmion_number(stokes_nonlocal(r, grid, modes)).nsk, M=10, seed=1
    )
    assert mean == pytest.approx(2, abs=1e-2)
    assert std < 0.01


def test_background_inflates_mixedness():
    # paired seeds across background levels
    means = []
    for b in (0.0, 0.1, 0.2):
        vals = [purity(tomo.reconstruct(tomo.simulate_counts(PSI, SETTINGS, 1e4, b, seed=s)).rho) for s in range(10)]
        means.append(np.mean(vals))
    assert means[0] > means[1] > means[2]


def test_counts_csv_round_trip(tmp_path):
    rec = tomo.simulate_counts(PSI, SETTINGS, 1e4, seed=1)
    path = tomo.write_counts_csv(rec, tmp_path / "counts.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "basisA,eigA,basisB,eigB,counts,exposure"
    assert lines[1].startswith("Z,+1,Z,+1,")
    back = tomo.read_counts_csv(path)
    assert [(r.setting, r.counts, r.exposure) for r in back] == [(r.setting, r.counts, r.exposure) for r in rec]


def test_density_csv_round_trip(tmp_path):
    truth = isotropic_mix(PSI.density(), 0.25)
    path = tomo.write_density_csv(truth, tmp_path / "rho.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,re,im" and len(lines) == 17
    np.testing.assert_allclose(tomo.read_density_csv(path).entries, truth.entries, atol=1e-12)


def cholesky_mle_oracle(records, start):
    """Independent maximizer: rho = T T^dag / Tr over lower-triangular T, searched by L-BFGS."""
    from scipy.optimize import minimize

    idx = np.tril_indices(4)

    def unpack(x):
        t = np.zeros((4, 4), dtype=complex)
        t[idx] = x[:10] + 1j * x[10:]
        m = t @ t.conj().T
        return m / np.trace(m).real

    vecs, groups = tomo._model(records)
    n = np.array([r.counts for r in records])
    t0 = np.linalg.cholesky(start + 1e-6 * np.eye(4))[idx]
    x0 = np.concatenate([t0.real, t0.imag])
    res = minimize(lambda x: -tomo._loglik(n, np.einsum("ki,ij,kj->k", vecs.conj(), unpack(x), vecs).real, groups), x0, method="L-BFGS-B", options={"maxiter": 5000, "gtol": 1e-10})
    return -res.fun


@settings(max_examples=8)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4]), st.floats(0, 0.2))
def test_mle_matches_cholesky_oracle(seed, rank, b):
    truth = random_density(np.random.default_rng(seed), rank=rank)
    rec = tomo.simulate_counts(truth, SETTINGS, 5e3, background_rate=b, seed=seed)
    best = cholesky_mle_oracle(rec, truth.entries)
    assert tomo.reconstruct(rec, method="projected_gradient").loglik >= best - 1e-3
    # the trace-norm stopping rule of R rho R leaves it short by far less than one likelihood unit
    assert tomo.reconstruct(rec).loglik >= best - 0.1


def test_certificate_bounds_remaining_gain():
    truth = isotropic_mix(PSI.density(), 0.3)
    rec = tomo.simulate_counts(truth, SETTINGS, 1e4, seed=8)
    vecs, _ = tomo._model(rec)
    n = np.array([r.counts for r in rec])
    weights = np.einsum("ki,kj->kij", vecs, vecs.conj())
    start = tomo.reconstruct_linear(rec)
    res = tomo.reconstruct(rec)
    best = res.loglik
    for state in (start.rho, truth):
        gap = tomo.optimality_gap(n, np.clip(np.einsum("ki,ij,kj->k", vecs.conj(), state.entries, vecs).real, 1e-300, None), weights)
        assert best - tomo.loglik(rec, state) <= gap + 1e-6
    assert res.converged


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 4]))
def test_solvers_reach_the_same_optimum(seed, rank):
    truth = random_density(np.random.default_rng(seed), rank=rank)
    rec = tomo.simulate_counts(truth, SETTINGS, 1e4, seed=seed)
    rhor = tomo.reconstruct(rec, method="rhor")
    pg = tomo.reconstruct(rec, method="projected_gradient")
    # both are maximizers up to the trace-norm stopping rule, far below statistical resolution
    assert abs(rhor.loglik - pg.loglik) < 0.5
    assert trace_distance(rhor.rho.entries, pg.rho.entries) < 0.01
    assert all(np.diff(pg.loglik_history) >= 0)


def test_unknown_solver_rejected():
    with pytest.raises(ValueError):
        tomo.mle_refine(tomo.simulate_counts(PSI, SETTINGS, 1e3, exact=True), PSI, method="newton")
