"""Capture statistics to readout numbers: S-curves, thresholds, fidelity.

An S-curve is capture probability vs drive amplitude at fixed detuning and
qubit preparation. Its logistic fit gives the threshold amplitude and width;
the separation between the two preparations' curves gives the raw readout
fidelity, and dividing by the excited-state survival over the capture
decision time back-corrects qubit decay.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace as dc_replace

import numpy as np
from scipy.optimize import curve_fit

from .errors import ChirplockError, ModelError, NumericalError, SpanError
from .model import SystemParams
from .quantum import ChirpPulse, capture_probability_quantum
from .semiclassical import (
    DT_DEFAULT,
    capture_ensemble,
    deterministic_threshold,
)
from .spectrum import find_avoided_crossings, track_branches

WIDTH_FACTOR = float(np.log(81.0))  # 10-90 span of a logistic in units of w

ENGINES = ("semiclassical", "quantum")


@dataclass
class SCurve:
    """Capture probability vs drive amplitude at one operating point."""

    amplitudes: np.ndarray
    probs: np.ndarray
    stderrs: np.ndarray
    qubit_init: int
    detuning: float

    @classmethod
    def from_ensemble(cls, ens) -> "SCurve":
        return cls(
            amplitudes=np.asarray(ens.amplitudes, dtype=float),
            probs=np.asarray(ens.probs, dtype=float),
            stderrs=np.asarray(ens.stderrs, dtype=float),
            qubit_init=ens.init_qubit,
            detuning=ens.detuning,
        )


@dataclass(frozen=True)
class ThresholdResult:
    """Logistic fit of an S-curve: v_half, 10-90 width, RMS residual."""

    v_half: float
    width: float
    fit_residual: float


@dataclass(frozen=True)
class FidelityReport:
    """Best separation of two S-curves and its T1 back-correction."""

    f_raw: float
    v_opt: float
    f_t1_corrected: float
    capture_time_used: float


def _logistic(v, v_half, w):
    z = np.clip((v - v_half) / w, -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-z))


def fit_threshold(curve: SCurve) -> ThresholdResult:
    """Weighted logistic fit P(V) = 1 / (1 + exp(-(V - v_half)/w)).

    Weights are inverse-variance from the binomial stderrs, floored at a
    quarter of the largest stderr so saturated points (p = 0 or 1, stderr 0)
    keep finite weight. The reported width is the 10-90 span, w * ln 81.

    Raises SpanError unless the curve reaches below 0.1 and above 0.9: a fit
    extrapolated from a partial S-curve is not a threshold measurement.
    """
    v = np.asarray(curve.amplitudes, dtype=float)
    pr = np.asarray(curve.probs, dtype=float)
    se = np.asarray(curve.stderrs, dtype=float)
    if v.size < 4:
        raise ModelError("need at least 4 amplitude points to fit a threshold")
    order = np.argsort(v)
    v, pr, se = v[order], pr[order], se[order]
    p_min, p_max = float(pr.min()), float(pr.max())
    if p_min >= 0.1 or p_max <= 0.9:
        raise SpanError(
            f"S-curve spans [{p_min:.3f}, {p_max:.3f}]; a threshold fit needs "
            "points below 0.1 and above 0.9",
            p_min=p_min,
            p_max=p_max,
        )
    sigma_floor = max(float(se.max()) / 4.0, 1e-4)
    sigma = np.maximum(se, sigma_floor)
    span = float(v.max() - v.min())
    interior = (pr > 0.02) & (pr < 0.98)
    if int(interior.sum()) < 2:
        # The transition is sharper than the grid, so the logistic width is
        # unconstrained from below: report the 0.5 crossing by linear
        # interpolation and the local grid step as a width upper bound.
        j = int(np.argmax(pr >= 0.5))
        if j > 0 and pr[j] > pr[j - 1]:
            frac = (0.5 - pr[j - 1]) / (pr[j] - pr[j - 1])
            v_half = float(v[j - 1] + frac * (v[j] - v[j - 1]))
            step = float(v[j] - v[j - 1])
        else:
            v_half = float(v[j])
            step = float(np.median(np.diff(v)))
        resid = pr - _logistic(v, v_half, step / (4.0 * WIDTH_FACTOR))
        return ThresholdResult(
            v_half=v_half,
            width=step,
            fit_residual=float(np.sqrt(np.mean(resid**2))),
        )
    v0 = float(v[np.argmin(np.abs(pr - 0.5))])
    v10 = float(v[np.argmax(pr >= 0.1)])
    v90 = float(v[np.argmax(pr >= 0.9)])
    w0 = max((v90 - v10) / WIDTH_FACTOR, span / 200.0)
    try:
        popt, _ = curve_fit(
            _logistic,
            v,
            pr,
            p0=[v0, w0],
            sigma=sigma,
            absolute_sigma=True,
            bounds=([v.min() - span, span / 5000.0], [v.max() + span, 2.0 * span]),
            x_scale=(span, span / 50.0),
            method="trf",
            max_nfev=5000,
        )
    except RuntimeError as exc:
        raise NumericalError(f"threshold fit did not converge: {exc}")
    resid = pr - _logistic(v, *popt)
    return ThresholdResult(
        v_half=float(popt[0]),
        width=float(popt[1] * WIDTH_FACTOR),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
    )


def fidelity(
    s0: SCurve,
    s1: SCurve,
    t1_ns: float | None = None,
    capture_time_ns: float | None = None,
) -> FidelityReport:
    """Readout fidelity from the two preparations' S-curves.

    f_raw = max over the common amplitude grid of |P1 - P0|; v_opt is the
    amplitude achieving it (smallest on ties). When both t1_ns and
    capture_time_ns are given, the excited-state survival
    s = exp(-capture_time/T1) is divided out of the separation
    (equivalently: the decay mixture P1_meas = s P1 + (1-s) P0 is inverted),
    capped at 1. Without them the corrected value equals f_raw.
    """
    if not np.array_equal(s0.amplitudes, s1.amplitudes):
        raise ModelError("fidelity needs both S-curves on the identical amplitude grid")
    sep = np.abs(np.asarray(s1.probs) - np.asarray(s0.probs))
    k = int(np.argmax(sep))
    f_raw = float(sep[k])
    v_opt = float(np.asarray(s0.amplitudes)[k])
    if t1_ns is not None and capture_time_ns is not None:
        if t1_ns <= 0:
            raise ModelError("t1_ns must be positive")
        if not np.isfinite(capture_time_ns) or capture_time_ns < 0:
            raise ModelError("capture_time_ns must be finite and non-negative")
        survival = float(np.exp(-capture_time_ns / t1_ns))
        f_t1 = min(1.0, f_raw / survival)
        t_used = float(capture_time_ns)
    else:
        f_t1 = f_raw
        t_used = float("nan")
    return FidelityReport(
        f_raw=f_raw, v_opt=v_opt, f_t1_corrected=f_t1, capture_time_used=t_used
    )


def stark_calibration(
    p: SystemParams,
    pump_detuning: float,
    pump_amp: float,
    allow_resonant: bool = False,
) -> float:
    """Mean photon number stocked by an off-resonant pump (linear cavity).

    nbar = (A/2)^2 / (d^2 + (kappa/2)^2) in angular units, which reduces to
    (A/kappa)^2 on resonance. The formula is only a calibration in the
    far-detuned regime; |pump_detuning| <= 5 kappa raises unless
    `allow_resonant` explicitly accepts the resonant reading.
    """
    if abs(pump_detuning) <= 5.0 * p.kappa and not allow_resonant:
        raise ModelError(
            f"pump detuning {pump_detuning:.3g} GHz is within 5 kappa "
            f"({5 * p.kappa:.3g} GHz) of the cavity; the dispersive photon "
            "calibration does not apply (pass allow_resonant=True to force "
            "the resonant formula)"
        )
    return pump_amp**2 / (4.0 * pump_detuning**2 + p.kappa**2)


@dataclass
class MapPoint:
    """One detuning row of a threshold map; failures are recorded, not fatal."""

    detuning: float
    v_half: float
    width: float
    fit_residual: float
    near_crossing: bool = False
    failed: bool = False
    reason: str = ""


@dataclass
class ThresholdMap:
    points: list[MapPoint]
    crossings: list
    qubit_init: int
    engine: str

    @property
    def n_failed(self) -> int:
        return sum(1 for pt in self.points if pt.failed)


def _map_point_worker(args) -> MapPoint:
    (
        p_base,
        detuning,
        pulse,
        qubit_init,
        engine,
        n_runs,
        seed0,
        n_amps,
        window,
        dt,
    ) = args
    p = p_base.with_(detuning=float(detuning))
    try:
        v_c = deterministic_threshold(p, pulse, init_qubit=qubit_init, dt=dt)
        amps = np.linspace(window[0] * v_c, window[1] * v_c, n_amps)
        if engine == "semiclassical":
            ens = capture_ensemble(
                p,
                pulse,
                amps,
                init_qubit=qubit_init,
                n_runs=n_runs,
                seed0=seed0,
                dt=dt,
            )
            curve = SCurve.from_ensemble(ens)
        else:
            probs = np.empty(n_amps)
            errs = np.empty(n_amps)
            for i, a in enumerate(amps):
                pulse_a = dc_replace(pulse, amplitude=float(a))
                probs[i], errs[i], _ = capture_probability_quantum(
                    p, pulse_a, init_qubit=qubit_init, n_traj=n_runs, seed0=seed0
                )
            curve = SCurve(amps, probs, errs, qubit_init, p.detuning)
        fit = fit_threshold(curve)
        return MapPoint(
            detuning=float(detuning),
            v_half=fit.v_half,
            width=fit.width,
            fit_residual=fit.fit_residual,
        )
    except ChirplockError as exc:
        return MapPoint(
            detuning=float(detuning),
            v_half=float("nan"),
            width=float("nan"),
            fit_residual=float("nan"),
            failed=True,
            reason=f"{type(exc).__name__}: {exc}",
        )


def map_crossings(
    p: SystemParams,
    detuning_lo: float,
    detuning_hi: float,
    manifolds: tuple[int, ...] = (4, 5),
    grid_step: float = 0.01,
) -> list:
    """Avoided crossings of the given manifolds within a detuning range."""
    need_photons = max(manifolds) + 3
    p_spec = p.with_(n_photons=max(p.n_photons, need_photons))
    margin = 0.1
    grid = np.arange(detuning_lo - margin, detuning_hi + margin + grid_step, grid_step)
    branches = track_branches(p_spec, grid, max_excitation=max(manifolds))
    crossings = []
    for m in manifolds:
        crossings.extend(find_avoided_crossings(branches, m))
    return [
        c for c in crossings if detuning_lo - margin <= c.detuning_at_min <= detuning_hi + margin
    ]


def threshold_map(
    p: SystemParams,
    detunings: np.ndarray,
    pulse: ChirpPulse,
    qubit_init: int = 1,
    engine: str = "semiclassical",
    n_runs: int = 400,
    seed0: int = 0,
    n_amps: int = 13,
    amp_window: tuple[float, float] = (0.55, 1.65),
    flag_window: float = 0.05,
    flag_manifolds: tuple[int, ...] = (4, 5),
    jobs: int = 1,
    dt: float = DT_DEFAULT,
) -> ThresholdMap:
    """Capture threshold vs detuning for one qubit preparation.

    Each detuning centers its amplitude grid on the deterministic (noiseless)
    threshold, runs the ensemble engine, and fits the S-curve. Per-point
    failures (unbracketable threshold, insufficient S-curve span, truncation)
    are recorded on the row and the map continues. Rows within `flag_window`
    of an avoided crossing of the flagged manifolds are marked.

    Points are independent; `jobs > 1` distributes them across processes
    without changing any result.
    """
    detunings = np.atleast_1d(np.asarray(detunings, dtype=float))
    if engine not in ENGINES:
        raise ModelError(f"engine must be one of {ENGINES}")
    tasks = [
        (p, d, pulse, qubit_init, engine, n_runs, seed0, n_amps, amp_window, dt)
        for d in detunings
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_map_point_worker, tasks))
    else:
        points = [_map_point_worker(t) for t in tasks]

    crossings = map_crossings(
        p, float(detunings.min()), float(detunings.max()), manifolds=flag_manifolds
    )
    for pt in points:
        pt.near_crossing = any(
            abs(pt.detuning - c.detuning_at_min) <= flag_window for c in crossings
        )
    return ThresholdMap(
        points=points, crossings=crossings, qubit_init=qubit_init, engine=engine
    )
