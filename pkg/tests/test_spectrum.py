"""Dressed-level labeling, avoided crossings, and the effective ladder fit.

The reference physics is the two-level RWA ladder with the Kerr term off,
where every manifold reduces to a 2x2 block with a closed-form spectrum
(see oracles.jc_dressed_ground_energies). The labeling machinery is checked
against that closed form, and the crossing finder against the exact gap
2 g sqrt(m) at zero detuning.
"""

import numpy as np
import pytest

from chirplock.errors import ModelError
from chirplock.model import SystemParams, build_hamiltonian
from chirplock.spectrum import (
    AvoidedCrossing,
    dispersive_shift,
    effective_params,
    eigenspectrum,
    find_avoided_crossings,
    labeled_energies,
    track_branches,
)

from oracles import jc_dressed_ground_energies, quadratic_energy_fit


def two_level_params(detuning, n_photons=8):
    return SystemParams(
        n_levels=2, n_photons=n_photons, kerr=0.0, detuning=detuning
    )


# ---------------------------------------------------------------------------
# eigensolver front door
# ---------------------------------------------------------------------------


def test_eigenspectrum_rejects_non_hermitian():
    m = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(ModelError):
        eigenspectrum(m)


def test_eigenspectrum_matches_numpy_on_valid_input():
    h = build_hamiltonian(SystemParams(n_levels=3, n_photons=4))
    vals, vecs = eigenspectrum(h)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(h), rtol=1e-12)
    np.testing.assert_allclose(
        vecs.conj().T @ h @ vecs, np.diag(vals), atol=1e-9
    )


# ---------------------------------------------------------------------------
# labeling against the closed-form two-level ladder
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("detuning", [-2.64, -0.8, 0.7])
def test_labeled_energies_match_closed_form(detuning):
    p = two_level_params(detuning)
    labels = [(0, n) for n in range(5)]
    levels = labeled_energies(p, labels, rwa=True)
    got = np.array([levels[(0, n)] - levels[(0, 0)] for n in range(5)])
    want = jc_dressed_ground_energies(
        p.cavity_freq, p.qubit_freq, p.g01, 4
    )
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_labeled_energies_bare_at_zero_coupling():
    p = SystemParams(g01=0.0, n_levels=3, n_photons=4)
    levels = labeled_energies(p, [(1, 2), (2, 0)])
    h = build_hamiltonian(p)
    diag = np.real(np.diag(h))
    assert levels[(1, 2)] == pytest.approx(diag[1 * 4 + 2], rel=1e-12)
    assert levels[(2, 0)] == pytest.approx(diag[2 * 4 + 0], rel=1e-12)


def test_labeled_energies_rejects_labels_outside_truncation():
    p = SystemParams(n_levels=2, n_photons=3)
    with pytest.raises(ModelError):
        labeled_energies(p, [(0, 3)])


def test_dispersive_shift_matches_closed_form():
    p = two_level_params(-2.64)
    want = jc_dressed_ground_energies(p.cavity_freq, p.qubit_freq, p.g01, 1)
    got = dispersive_shift(p, qubit_state=0, rwa=True)
    assert got == pytest.approx(want[1] - p.cavity_freq, abs=1e-9)


# ---------------------------------------------------------------------------
# branch tracking across detuning
# ---------------------------------------------------------------------------


def test_track_branches_validates_grid():
    p = two_level_params(-1.0)
    with pytest.raises(ModelError):
        track_branches(p, np.array([0.5]))
    with pytest.raises(ModelError):
        track_branches(p, np.array([0.5, 0.2, 0.8]))


def test_track_branches_labels_follow_closed_form_far_from_resonance():
    p = two_level_params(-1.0)
    grid = np.linspace(-3.0, -1.0, 21)
    branches = track_branches(p, grid, max_excitation=3, rwa=True)
    by_label = {b.label: b for b in branches}
    for k, d in enumerate(grid):
        want = jc_dressed_ground_energies(
            p.cavity_freq, p.cavity_freq + d, p.g01, 3
        )
        for n in range(4):
            b = by_label[(0, n)]
            assert b.energies[k] - by_label[(0, 0)].energies[k] == pytest.approx(
                want[n], abs=1e-9
            )
    # far from resonance every branch is nearly bare
    assert all(b.overlap_trace.min() > 0.9 for b in branches)


def test_avoided_crossing_gap_matches_two_level_splitting():
    p = two_level_params(0.0)
    grid = np.linspace(-0.5, 0.5, 41)
    branches = track_branches(p, grid, rwa=True)
    for m in (1, 2, 3, 4):
        found = find_avoided_crossings(branches, m)
        assert len(found) == 1
        c = found[0]
        assert set(c.pair) == {(0, m), (1, m - 1)}
        assert c.detuning_at_min == pytest.approx(0.0, abs=1e-9)
        assert c.gap == pytest.approx(2 * p.g01 * np.sqrt(m), rel=1e-9)


def test_avoided_crossing_requires_positive_gap():
    with pytest.raises(ModelError):
        AvoidedCrossing(pair=((0, 1), (1, 0)), detuning_at_min=0.0, gap=0.0, manifold=1)


def test_monotone_gap_produces_no_crossing():
    p = two_level_params(-1.0)
    grid = np.linspace(-3.0, -1.5, 16)
    branches = track_branches(p, grid, rwa=True)
    assert find_avoided_crossings(branches, 1) == []


# ---------------------------------------------------------------------------
# effective ladder fit
# ---------------------------------------------------------------------------


def test_effective_lambda_is_minus_kerr_without_coupling():
    p = SystemParams(g01=0.0, kerr=-6e-5)
    eff = effective_params(p)
    # E(0, n) = wr n + K n (n - 1) = (wr - K) n + K n^2, exactly quadratic
    assert eff.lam == pytest.approx(6e-5, abs=1e-12)
    assert eff.omega == pytest.approx(p.cavity_freq - p.kerr, abs=1e-10)
    assert eff.fit_residual < 1e-10


def test_effective_fit_agrees_with_reference_fit():
    p = two_level_params(-2.64)
    eff = effective_params(p, n_fit=4, rwa=True)
    levels = labeled_energies(p, [(0, n) for n in range(5)], rwa=True)
    e = np.array([levels[(0, n)] for n in range(5)])
    eps, omega, lam = quadratic_energy_fit(e)
    assert eff.lam == pytest.approx(lam, rel=1e-9)
    assert eff.omega == pytest.approx(omega, rel=1e-9)


def test_effective_params_validates_fit_order():
    p = SystemParams()
    with pytest.raises(ModelError):
        effective_params(p, n_fit=2)
    with pytest.raises(ModelError):
        effective_params(SystemParams(n_photons=4), n_fit=4)
