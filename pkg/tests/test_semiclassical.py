"""Tests for the classical two-oscillator model.

The linear limits have closed forms, so the integrator is checked against
those before any capture statistics are trusted. Ensemble tests pin the
noise contract: vacuum noise on the cavity variable only, the qubit variable
starting exactly on the Bloch pole.
"""

import numpy as np
import pytest

from chirplock.errors import ModelError, NumericalError
from chirplock.model import SystemParams
from chirplock.quantum import ChirpPulse
from chirplock.semiclassical import (
    CaptureEnsemble,
    ClassicalState,
    ar_capture,
    capture_cut,
    capture_ensemble,
    classical_nonlinearity,
    classical_threshold,
    deterministic_threshold,
    ensemble_mean_trace,
    integrate_coupled,
    median_capture_time,
    sample_vacuum,
)

WR = 5.3445


def bare_cavity(**kw):
    base = dict(g01=0.0, n_levels=2, n_photons=2)
    base.update(kw)
    return SystemParams(**base)


def ar_pulse(amplitude):
    """Chirp from 100 MHz above the cavity to 50 MHz below in 150 ns."""
    return ChirpPulse(WR + 0.1, WR - 0.05, 150.0, amplitude)


class TestLinearLimits:
    def test_driven_linear_cavity_matches_closed_form(self):
        # resonant drive, no Kerr, no coupling:
        #   alpha_c(t) = -i (A / kappa) (1 - exp(-pi kappa t))
        kappa = 2.0e-3
        amp = 5.0e-4
        p = bare_cavity(kerr=0.0, kappa=kappa, gamma1=0.0)
        pulse = ChirpPulse(WR, WR, 400.0, amp)
        series = integrate_coupled(
            p, pulse, ClassicalState(0.0j, 0.0j, 0.0), sample_dt=50.0
        )
        times = np.array([s.time for s in series])
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(400.0)
        got = np.array([s.alpha_c for s in series])
        want = -1j * (amp / kappa) * (1.0 - np.exp(-np.pi * kappa * times))
        assert np.allclose(got, want, rtol=1e-6, atol=1e-12)
        # nothing couples into the qubit variable
        assert all(s.alpha_q == 0.0 for s in series)

    def test_qubit_duffing_phase_rotation(self):
        # undriven, undamped, uncoupled qubit amplitude of unit modulus:
        # the modulus is conserved and the phase advances at
        # -2 pi (wq - f - ec) per ns (Duffing term at |a_q|^2 = 1).
        p = bare_cavity(gamma1=0.0, detuning=-1.5)
        f = p.qubit_freq - 0.15
        pulse = ChirpPulse(f, f, 100.0, 0.0)
        series = integrate_coupled(
            p, pulse, ClassicalState(0.0j, 1.0 + 0.0j, 0.0), sample_dt=10.0
        )
        mods = np.array([abs(s.alpha_q) for s in series])
        assert np.allclose(mods, 1.0, atol=1e-9)
        t_end = series[-1].time
        want = np.exp(-2j * np.pi * (p.qubit_freq - f - p.ec) * t_end)
        assert series[-1].alpha_q == pytest.approx(want, rel=1e-6)

    def test_divergence_raises(self):
        p = bare_cavity(gamma1=0.0)
        pulse = ChirpPulse(WR, WR, 10.0, 1.0e5)
        # the blow-up may overflow between samples; the guard accepts
        # non-finite values as divergence, so silence the interim warnings
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(NumericalError, match="diverged"):
                integrate_coupled(p, pulse, ClassicalState(0.0j, 0.0j, 0.0))


class TestVacuumSampling:
    def test_half_quantum_statistics(self):
        draws = [sample_vacuum(123, m) for m in range(4000)]
        ac = np.array([d[0] for d in draws])
        aq = np.array([d[1] for d in draws])
        for arr in (ac, aq):
            assert abs(np.mean(np.abs(arr) ** 2) - 0.5) < 0.03
            assert abs(np.mean(arr)) < 0.03
            assert abs(np.var(arr.real) - 0.25) < 0.02
            assert abs(np.var(arr.imag) - 0.25) < 0.02

    def test_reproducible_and_member_keyed(self):
        assert sample_vacuum(5, 7) == sample_vacuum(5, 7)
        assert sample_vacuum(5, 7) != sample_vacuum(5, 8)
        assert sample_vacuum(5, 7) != sample_vacuum(6, 7)

    def test_initial_noise_enters_cavity_only(self):
        # the ensemble contract: mean |a_q|^2 (0) is exactly init_qubit while
        # mean |a_c|^2 (0) carries the half-quantum vacuum spread
        p = bare_cavity()
        pulse = ChirpPulse(WR, WR, 5.0, 0.0)
        _, nc, nq = ensemble_mean_trace(
            p, pulse, n_runs=400, seed0=9, init_qubit=1, sample_dt=5.0
        )
        assert nq[0] == pytest.approx(1.0, abs=1e-12)
        assert abs(nc[0] - 0.5) < 0.1

        _, nc0, nq0 = ensemble_mean_trace(
            p, pulse, n_runs=16, seed0=9, init_qubit=1, vacuum_noise=False,
            sample_dt=5.0,
        )
        assert nc0[0] == 0.0
        assert nq0[0] == 1.0

        _, nc1, nq1 = ensemble_mean_trace(
            p, pulse, n_runs=16, seed0=9, init_qubit=0, vacuum_noise=False,
            sample_dt=5.0,
        )
        assert nc1[0] == 0.0 and nq1[0] == 0.0

    def test_init_qubit_validation(self):
        p = bare_cavity()
        pulse = ar_pulse(0.1)
        with pytest.raises(ModelError, match="init_qubit"):
            ar_capture(p, pulse, init_qubit=2)


class TestCaptureEnsemble:
    def test_deterministic_and_partition_invariant(self):
        p = bare_cavity(gamma1=0.0)
        pulse = ar_pulse(0.0)
        amps = np.array([0.08, 0.13])
        kw = dict(init_qubit=0, seed0=11, sample_dt=5.0)
        a = capture_ensemble(p, pulse, amps, n_runs=6, **kw)
        b = capture_ensemble(p, pulse, amps, n_runs=6, **kw)
        assert np.array_equal(a.probs, b.probs)
        assert np.array_equal(a.final_n, b.final_n)
        assert np.array_equal(a.capture_times, b.capture_times, equal_nan=True)

        # noise is keyed by member index alone, so a shifted smaller batch
        # reproduces the matching columns bit for bit
        c = capture_ensemble(p, pulse, amps, n_runs=4, member_offset=2, **kw)
        assert np.array_equal(c.final_n, a.final_n[:, 2:6])
        assert np.array_equal(
            c.capture_times, a.capture_times[:, 2:6], equal_nan=True
        )

    def test_capture_classification_consistent(self):
        p = bare_cavity(gamma1=0.0)
        pulse = ar_pulse(0.0)
        ens = capture_ensemble(
            p, pulse, np.array([0.05, 0.16]), n_runs=8, seed0=4, sample_dt=5.0
        )
        cut = capture_cut(p, pulse)
        captured = ens.final_n > cut
        assert np.array_equal(captured, ~np.isnan(ens.capture_times))
        assert np.array_equal(ens.probs, captured.mean(axis=1))
        times = ens.capture_times[captured]
        assert np.all((times >= 0.0) & (times <= pulse.duration))
        # well below and well above the threshold ridge
        assert ens.probs[0] < ens.probs[1]

    def test_single_run_matches_ensemble_column(self):
        p = bare_cavity(gamma1=0.0)
        ens = capture_ensemble(
            p, ar_pulse(0.0), np.array([0.13]), n_runs=5, seed0=11,
            sample_dt=5.0,
        )
        r = ar_capture(p, ar_pulse(0.13), seed0=11, member=3, sample_dt=5.0)
        assert r.seed == (11, 3)
        assert r.final_n == ens.final_n[0, 3]
        t = ens.capture_times[0, 3]
        if np.isnan(t):
            assert r.capture_time is None and not r.captured
        else:
            assert r.captured and r.capture_time == t

    def test_validation(self):
        p = bare_cavity()
        pulse = ar_pulse(0.1)
        with pytest.raises(ModelError, match="non-negative"):
            capture_ensemble(p, pulse, np.array([-0.1]))
        with pytest.raises(ModelError, match="n_runs"):
            capture_ensemble(p, pulse, np.array([0.1]), n_runs=0)
        with pytest.raises(ModelError, match="cut_fraction"):
            capture_cut(p, pulse, cut_fraction=1.0)
        # chirp must end below the cavity for a softening Kerr
        with pytest.raises(ModelError, match="soft side"):
            capture_cut(p, ChirpPulse(WR - 0.1, WR + 0.1, 100.0, 0.1))

    def test_median_capture_time(self):
        base = dict(
            amplitudes=np.array([0.1]),
            probs=np.array([0.5]),
            stderrs=np.array([0.25]),
            final_n=np.zeros((1, 4)),
            init_qubit=0,
            init_note="",
            seed0=0,
            n_runs=4,
            detuning=-2.64,
        )
        none = CaptureEnsemble(
            capture_times=np.full((1, 4), np.nan), **base
        )
        assert np.isnan(median_capture_time(none))
        some = CaptureEnsemble(
            capture_times=np.array([[np.nan, 10.0, 20.0, np.nan]]), **base
        )
        assert median_capture_time(some) == 15.0
        assert median_capture_time(some, amp_index=0) == 15.0


class TestThresholds:
    def test_deterministic_threshold_near_duffing_scale(self):
        # the bare-cavity capture threshold should sit close to the analytic
        # Duffing estimate 0.41 mu^(3/4) / sqrt(beta) (angular units)
        p = bare_cavity(gamma1=0.0)
        rate = 7.9e-4
        pulse = ChirpPulse(WR + 0.1, WR - 0.15, 0.25 / rate, 0.0)
        thr = deterministic_threshold(p, pulse)
        mu = 2.0 * np.pi * rate
        beta = 4.0 * np.pi * abs(p.kerr)
        guess = 0.41 * mu**0.75 / np.sqrt(beta) / np.pi
        assert 0.6 < thr / guess < 1.7

    def test_classical_threshold_validation(self):
        p = bare_cavity()
        with pytest.raises(ModelError, match="at least 4"):
            classical_threshold(p, np.array([1e-3, 2e-3, 4e-3]))
        with pytest.raises(ModelError, match="positive"):
            classical_threshold(p, np.array([-1e-3, 1e-3, 2e-3, 4e-3]))
        with pytest.raises(ModelError, match="decade"):
            classical_threshold(p, np.array([1e-3, 2e-3, 4e-3, 8e-3]))


class TestClassicalNonlinearity:
    def test_bare_cavity_recovers_kerr(self):
        p = bare_cavity(gamma1=0.0)
        lam = classical_nonlinearity(p)
        assert lam == pytest.approx(-p.kerr, rel=0.1)

    def test_needs_two_targets(self):
        with pytest.raises(ModelError, match="two photon targets"):
            classical_nonlinearity(bare_cavity(), photon_targets=(1.0,))
