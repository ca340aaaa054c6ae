import numpy as np
import pytest
from hypothesis import given, strategies as st

from skyrmion_transfer.channels import NoiseParams, isotropic_mix
from skyrmion_transfer.correlations import fidelity_pure
from skyrmion_transfer.states import BELL_LABELS, SkyrmionSpec, bell_basis_spin_momentum, nonlocal_target, psi2
from skyrmion_transfer.tensor import (
    MOMENTUM_A,
    OAM_A,
    POL_B,
    SPIN_A,
    LinearOperator,
    StateVector,
    apply,
    conjugate,
    tensor_product,
)
from skyrmion_transfer.transfer import (
    bsm_project,
    disentangling_unitary,
    pauli_correction,
    prepare_input,
    transfer_pipeline,
    transferred_state,
)

from conftest import random_density

SPEC = SkyrmionSpec(2)


def test_disentangling_unitary_is_unitary():
    u = disentangling_unitary().entries
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-15)


def test_disentangling_unitary_maps_bell_to_products():
    u = disentangling_unitary()
    images = {k: apply(u, b).amplitudes.reshape(2, 2) for k, b in bell_basis_spin_momentum().items()}
    h = 1 / np.sqrt(2)
    np.testing.assert_allclose(images["PhiPlus"], [[h, h], [0, 0]], atol=1e-15)  # |L>|+k>
    for k, m in images.items():
        assert np.linalg.matrix_rank(m, tol=1e-12) == 1, k
    flat = np.array([m.ravel() for m in images.values()])
    np.testing.assert_allclose(flat.conj() @ flat.T, np.eye(4), atol=1e-15)


@pytest.mark.parametrize("via_unitary", [False, True])
def test_ideal_outcomes(via_unitary):
    target = nonlocal_target(SPEC)
    rho = psi2(SPEC)
    for label in BELL_LABELS:
        out = bsm_project(rho, label, via_unitary=via_unitary)
        assert out.probability == pytest.approx(0.25, abs=1e-12)
        assert out.conditional_state.factors == (OAM_A, POL_B)
    phi = bsm_project(rho, "PhiPlus", via_unitary=via_unitary)
    assert fidelity_pure(target, phi.conditional_state) == pytest.approx(1, abs=1e-12)
    psi_minus = bsm_project(rho, "PsiMinus", via_unitary=via_unitary)
    rotated = apply(LinearOperator.pauli("y", POL_B), target)
    assert fidelity_pure(rotated, psi_minus.conditional_state) == pytest.approx(1, abs=1e-12)


def test_projection_of_product_input():
    ket = np.zeros(16)
    ket[0] = 1  # |L, k1, 0, H>
    state = StateVector((SPIN_A, MOMENTUM_A, OAM_A, POL_B), ket)
    out = bsm_project(state, "PhiPlus")
    assert out.probability == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(out.conditional_state.entries, np.diag([1, 0, 0, 0]), atol=1e-15)


def test_zero_probability_outcome_is_degenerate():
    ket = np.zeros(16)
    ket[0] = 1  # |L, k1, ...> has no PsiPlus component
    out = bsm_project(StateVector((SPIN_A, MOMENTUM_A, OAM_A, POL_B), ket), "PsiPlus")
    assert out.degenerate and out.probability == 0.0


def test_bsm_validates_inputs():
    with pytest.raises(ValueError):
        bsm_project(psi2(SPEC), "Omega")
    with pytest.raises(ValueError):
        bsm_project(nonlocal_target(SPEC), "PhiPlus")


def test_corrections():
    target = nonlocal_target(SPEC)
    assert np.array_equal(pauli_correction("PhiPlus").entries, np.eye(2))
    z = LinearOperator.pauli("z", POL_B)
    fixed = conjugate(pauli_correction("PhiMinus"), conjugate(z, target.density()))
    assert fidelity_pure(target, fixed) == pytest.approx(1, abs=1e-15)
    minus_i_y = LinearOperator((POL_B,), -1j * LinearOperator.pauli("y", POL_B).entries)
    fixed = apply(pauli_correction("PsiMinus"), apply(minus_i_y, target))
    assert abs(fixed.inner(target)) == pytest.approx(1, abs=1e-15)
    assert target.inner(fixed) == pytest.approx(-1j, abs=1e-15)  # global phase -i


@pytest.mark.parametrize("l", [1, 2, 3])
def test_noiseless_pipeline(l):
    spec = SkyrmionSpec(l)
    target = nonlocal_target(spec)
    corrected = transfer_pipeline(spec)
    raw = transfer_pipeline(spec, correct=False)
    for label in BELL_LABELS:
        assert corrected[label].probability == pytest.approx(0.25, abs=1e-12)
        assert fidelity_pure(target, corrected[label].conditional_state) == pytest.approx(1, abs=1e-12)
    raw_f = [fidelity_pure(target, raw[k].conditional_state) for k in BELL_LABELS]
    np.testing.assert_allclose(raw_f, [1, 0, 0, 0], atol=1e-12)


@pytest.mark.parametrize("xi0", [0.1, 0.4, 0.9])
def test_link_noise_gives_werner_branches(xi0):
    werner = isotropic_mix(nonlocal_target(SPEC).density(), xi0)
    for b in transfer_pipeline(SPEC, NoiseParams(xi0=xi0)).values():
        np.testing.assert_allclose(b.conditional_state.entries, werner.entries, atol=1e-12)


noise_strategy = st.builds(
    NoiseParams,
    xi0=st.floats(0, 1),
    p=st.floats(0, 1),
    axis=st.sampled_from(["x", "y", "z"]),
    lambda1=st.floats(0, 1),
)


@given(noise_strategy)
def test_probabilities_sum_to_one(noise):
    branches = transfer_pipeline(SPEC, noise)
    assert sum(b.probability for b in branches.values()) == pytest.approx(1, abs=1e-12)


@given(noise_strategy)
def test_unitary_realization_matches_projection(noise):
    direct = transfer_pipeline(SPEC, noise)
    chip = transfer_pipeline(SPEC, noise, via_unitary=True)
    for k in BELL_LABELS:
        assert abs(direct[k].probability - chip[k].probability) < 1e-12
        np.testing.assert_allclose(direct[k].conditional_state.entries, chip[k].conditional_state.entries, atol=1e-12)


@given(noise_strategy)
def test_corrected_branches_agree_under_link_noise(noise):
    states = [b.conditional_state.entries for b in transfer_pipeline(SPEC, noise).values()]
    for s in states[1:]:
        np.testing.assert_allclose(s, states[0], atol=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_arbitrary_link_state_probabilities(seed):
    rng = np.random.default_rng(seed)
    link = random_density(rng, (MOMENTUM_A, POL_B))
    from skyrmion_transfer.states import local_skyrmion

    rho = tensor_product(local_skyrmion(SPEC).density(), link)
    total = sum(bsm_project(rho, k).probability for k in BELL_LABELS)
    assert total == pytest.approx(1, abs=1e-12)
    for k in BELL_LABELS:
        a = bsm_project(rho, k)
        b = bsm_project(rho, k, via_unitary=True)
        np.testing.assert_allclose(a.conditional_state.entries, b.conditional_state.entries, atol=1e-12)


def test_prepare_input_spans_all_factors():
    rho = prepare_input(SPEC, NoiseParams(xi0=0.2, p=0.1, lambda1=0.05))
    assert rho.factors == (SPIN_A, MOMENTUM_A, OAM_A, POL_B)


def test_transferred_state_is_outcome_average():
    noise = NoiseParams(xi0=0.3, p=0.2, axis="y")
    avg = transferred_state(SPEC, noise)
    branches = transfer_pipeline(SPEC, noise)
    manual = sum(b.probability * b.conditional_state.entries for b in branches.values())
    np.testing.assert_allclose(avg.entries, manual, atol=1e-14)
