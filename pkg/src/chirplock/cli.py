"""Config-driven command line interface.

Every subcommand reads one INI config (see `chirplock.config`), runs a
single sweep, and writes CSV files with reproducible metadata headers plus
rendered PNG figures into the output directory. Physics never comes from
positional arguments; the flags only select the config, override the output
directory, seed, or engine, and size the worker pool.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 partial sweep
(some grid points failed; see stderr and the failed column in the CSV).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .analysis import SCurve, fidelity, fit_threshold, threshold_map
from .config import (
    RunConfig,
    ensure_outdir,
    load_config,
    write_csv,
)
from .errors import ChirplockError, ConfigError
from .quantum import (
    capture_probability_quantum,
    evolve_trajectory,
    steady_transmission,
)
from .semiclassical import (
    ClassicalState,
    capture_ensemble,
    ensemble_mean_trace,
    integrate_coupled,
    median_capture_time,
)
from .spectrum import effective_params, find_avoided_crossings, track_branches

MAX_EXCITATION = 5
CLASSICAL_TARGETS = (0.05, 0.1, 0.2, 0.4)
DYNAMIC_NBARS = (0.25, 0.75)


def _require_sweep(cfg: RunConfig, parameter: str, command: str):
    if cfg.sweep.parameter != parameter:
        raise ConfigError(
            f"sweep.parameter: {command} sweeps {parameter!r}, "
            f"config says {cfg.sweep.parameter!r}"
        )


def _require_pulse(cfg: RunConfig, command: str):
    if cfg.pulse is None:
        raise ConfigError(f"pulse: section is required for {command}")


def _pulse_with_amplitude(cfg: RunConfig, amp: float):
    import dataclasses

    return dataclasses.replace(cfg.pulse, amplitude=float(amp))


def _render(name: str, outdir: str, *args, **kwargs):
    from . import plots

    getattr(plots, name)(outdir, *args, **kwargs)


def cmd_spectrum(cfg: RunConfig, jobs: int, outdir: str) -> int:
    _require_sweep(cfg, "detuning", "spectrum")
    grid = cfg.sweep.grid()
    branches = track_branches(cfg.system, grid, max_excitation=MAX_EXCITATION)

    rows = []
    for b in branches:
        for d, e in zip(b.detunings, b.energies):
            rows.append((d, b.label[0], b.label[1], e))
    write_csv(
        f"{outdir}/branches.csv",
        "spectrum",
        ["detuning_ghz", "label_q", "label_n", "energy_ghz"],
        rows,
        cfg,
    )

    crossings = []
    for manifold in range(1, MAX_EXCITATION + 1):
        crossings.extend(find_avoided_crossings(branches, manifold))
    crossings.sort(key=lambda c: (c.manifold, c.detuning_at_min))
    xrows = [
        (
            f"{c.pair[0][0]}.{c.pair[0][1]}|{c.pair[1][0]}.{c.pair[1][1]}",
            c.detuning_at_min,
            c.gap,
            c.manifold,
        )
        for c in crossings
    ]
    write_csv(
        f"{outdir}/crossings.csv",
        "spectrum",
        ["pair", "detuning_at_min_ghz", "gap_ghz", "manifold"],
        xrows,
        cfg,
    )
    _render("spectrum_figure", outdir, branches, crossings)
    return 0


def cmd_nonlinearity(cfg: RunConfig, jobs: int, outdir: str) -> int:
    from .semiclassical import classical_nonlinearity

    _require_sweep(cfg, "detuning", "nonlinearity")
    grid = cfg.sweep.grid()
    rows = []
    n_failed = 0
    for d in grid:
        p = cfg.system.with_(detuning=float(d))
        lam_s = effective_params(p).lam
        try:
            lam_c = classical_nonlinearity(p, photon_targets=CLASSICAL_TARGETS)
        except ChirplockError as exc:
            print(f"nonlinearity: classical point delta={d:+.4f} failed: {exc}",
                  file=sys.stderr)
            lam_c = float("nan")
            n_failed += 1
        lam_d = float("nan")
        if cfg.engine == "quantum":
            try:
                lam_d = _dynamic_lambda(p)
            except ChirplockError as exc:
                print(f"nonlinearity: dynamic point delta={d:+.4f} failed: {exc}",
                      file=sys.stderr)
                n_failed += 1
        rows.append((float(d), lam_s, lam_c, lam_d))
    write_csv(
        f"{outdir}/nonlinearity.csv",
        "nonlinearity",
        ["detuning_ghz", "lambda_spectral_ghz", "lambda_classical_ghz",
         "lambda_dynamic_ghz"],
        rows,
        cfg,
    )
    _render("nonlinearity_figure", outdir, rows, cfg.engine == "quantum")
    return 4 if n_failed else 0


def _dynamic_lambda(p) -> float:
    """Small-nbar dynamical probe: resonance shift per stocked photon / -2."""
    from .spectrum import dispersive_shift

    # the probe window must straddle the dressed (qubit-ground) resonance,
    # which the dispersive pull moves well off the bare cavity line
    f_dressed = p.cavity_freq + dispersive_shift(p, 0, rwa=True)
    pump_f = f_dressed - max(0.035, 7.0 * p.kappa)
    span = 6.0 * p.kappa
    peaks = []
    for nbar in DYNAMIC_NBARS:
        freqs = np.linspace(f_dressed - span, f_dressed + span / 2, 17)
        res = steady_transmission(p, freqs, probe_amp=p.kappa / 20.0,
                                  pump_freq=pump_f, pump_nbar=nbar)
        if not np.all(res.converged):
            print(
                f"nonlinearity: pumped probe at nbar={nbar} did not fully "
                "settle; treat lambda_dynamic as a diagnostic, not a "
                "measurement", file=sys.stderr,
            )
        mag = np.asarray(res.response)
        i = int(np.clip(np.argmax(mag), 1, mag.size - 2))
        c = np.polyfit(freqs[i - 1:i + 2], mag[i - 1:i + 2], 2)
        peaks.append(-c[1] / (2.0 * c[0]))
    slope = (peaks[1] - peaks[0]) / (DYNAMIC_NBARS[1] - DYNAMIC_NBARS[0])
    return -slope / 2.0


def cmd_chirp(cfg: RunConfig, jobs: int, outdir: str) -> int:
    _require_sweep(cfg, "amplitude", "chirp")
    _require_pulse(cfg, "chirp")
    rows = []
    for amp in cfg.sweep.grid():
        pulse = _pulse_with_amplitude(cfg, amp)
        if cfg.engine == "semiclassical":
            aq0 = 1.0 + 0.0j if cfg.init_qubit == 1 else 0.0j
            series = integrate_coupled(
                cfg.system, pulse, ClassicalState(alpha_c=0.0j, alpha_q=aq0, time=0.0)
            )
            times = np.array([s.time for s in series])
            shot_c = np.array([abs(s.alpha_c) ** 2 for s in series])
            shot_q = np.array([abs(s.alpha_q) ** 2 for s in series])
            _, mean_c, mean_q = ensemble_mean_trace(
                cfg.system, pulse, n_runs=cfg.n_runs, seed0=cfg.seed0,
                init_qubit=cfg.init_qubit,
            )
        else:
            rec = evolve_trajectory(
                cfg.system, pulse, init_qubit=cfg.init_qubit,
                seed=cfg.seed0, member=0,
            )
            times = rec.times
            shot_c, shot_q = rec.mean_n, rec.qubit_pop
            acc_c = np.zeros_like(shot_c)
            acc_q = np.zeros_like(shot_q)
            for m in range(cfg.n_runs):
                r = evolve_trajectory(
                    cfg.system, pulse, init_qubit=cfg.init_qubit,
                    seed=cfg.seed0, member=m,
                )
                acc_c += r.mean_n
                acc_q += r.qubit_pop
            mean_c, mean_q = acc_c / cfg.n_runs, acc_q / cfg.n_runs
        for k in range(times.size):
            rows.append((float(amp), float(times[k]), shot_c[k], mean_c[k],
                         shot_q[k], mean_q[k]))
    write_csv(
        f"{outdir}/chirp_transients.csv",
        "chirp",
        ["amplitude_ghz", "time_ns", "cavity_n_shot", "cavity_n_mean",
         "qubit_exc_shot", "qubit_exc_mean"],
        rows,
        cfg,
    )
    _render("chirp_figure", outdir, rows)
    return 0


def _scurve_points(cfg: RunConfig, init_qubit: int, jobs: int):
    amps = cfg.sweep.grid()
    if cfg.engine == "semiclassical":
        ens = capture_ensemble(
            cfg.system, cfg.pulse, amps, init_qubit=init_qubit,
            n_runs=cfg.n_runs, seed0=cfg.seed0,
        )
        return ens, np.asarray(ens.probs), np.asarray(ens.stderrs)
    probs = np.empty(amps.size)
    errs = np.empty(amps.size)
    for i, amp in enumerate(amps):
        pulse = _pulse_with_amplitude(cfg, amp)
        probs[i], errs[i], _ = capture_probability_quantum(
            cfg.system, pulse, init_qubit=init_qubit,
            n_traj=cfg.n_runs, seed0=cfg.seed0, jobs=jobs,
        )
    return None, probs, errs


def cmd_scurve(cfg: RunConfig, jobs: int, outdir: str) -> int:
    _require_sweep(cfg, "amplitude", "scurve")
    _require_pulse(cfg, "scurve")
    _, probs, errs = _scurve_points(cfg, cfg.init_qubit, jobs)
    amps = cfg.sweep.grid()
    meta = {}
    try:
        curve = SCurve(amplitudes=amps, probs=probs, stderrs=errs,
                       qubit_init=cfg.init_qubit,
                       detuning=cfg.system.detuning)
        fit = fit_threshold(curve)
        meta = {"fit.v_half": fit.v_half, "fit.width": fit.width,
                "fit.residual": fit.fit_residual}
    except ChirplockError as exc:
        print(f"scurve: threshold fit skipped: {exc}", file=sys.stderr)
    rows = [
        (float(a), float(p), float(e), cfg.n_runs, cfg.seed0)
        for a, p, e in zip(amps, probs, errs)
    ]
    write_csv(
        f"{outdir}/scurve.csv",
        "scurve",
        ["amplitude_ghz", "p_capture", "stderr", "n_runs", "seed0"],
        rows,
        cfg,
        meta,
    )
    _render("scurve_figure", outdir, amps, probs, errs, meta)
    return 0


def cmd_fidelity(cfg: RunConfig, jobs: int, outdir: str) -> int:
    _require_sweep(cfg, "amplitude", "fidelity")
    _require_pulse(cfg, "fidelity")
    amps = cfg.sweep.grid()
    ens0, p0, e0 = _scurve_points(cfg, 0, jobs)
    ens1, p1, e1 = _scurve_points(cfg, 1, jobs)
    s0 = SCurve(amplitudes=amps, probs=p0, stderrs=e0, qubit_init=0,
                detuning=cfg.system.detuning)
    s1 = SCurve(amplitudes=amps, probs=p1, stderrs=e1, qubit_init=1,
                detuning=cfg.system.detuning)

    t1_ns = None
    t_capture = None
    if cfg.system.gamma1 > 0.0:
        t1_ns = 1.0 / (2.0 * np.pi * cfg.system.gamma1)
        if ens1 is not None:
            k = int(np.argmax(np.abs(p1 - p0)))
            t_capture = median_capture_time(ens1, k)
            if np.isnan(t_capture):
                t_capture = None
    if t1_ns is not None and t_capture is not None:
        report = fidelity(s0, s1, t1_ns=t1_ns, capture_time_ns=t_capture)
    else:
        report = fidelity(s0, s1)

    meta = {
        "fidelity.f_raw": report.f_raw,
        "fidelity.v_opt": report.v_opt,
        "fidelity.f_t1_corrected": report.f_t1_corrected,
    }
    if t1_ns is not None:
        meta["fidelity.t1_ns"] = t1_ns
    if t_capture is not None:
        meta["fidelity.capture_time_median_ns"] = t_capture
    rows = [
        (float(a), float(x0), float(s_a), float(x1), float(s_b))
        for a, x0, s_a, x1, s_b in zip(amps, p0, e0, p1, e1)
    ]
    write_csv(
        f"{outdir}/fidelity.csv",
        "fidelity",
        ["amplitude_ghz", "p_capture_q0", "stderr_q0", "p_capture_q1",
         "stderr_q1"],
        rows,
        cfg,
        meta,
    )
    _render("fidelity_figure", outdir, amps, p0, e0, p1, e1, meta)
    return 0


def cmd_threshold_map(cfg: RunConfig, jobs: int, outdir: str) -> int:
    _require_sweep(cfg, "detuning", "threshold-map")
    _require_pulse(cfg, "threshold-map")
    grid = cfg.sweep.grid()
    maps = {}
    for q in (0, 1):
        maps[q] = threshold_map(
            cfg.system, grid, cfg.pulse, qubit_init=q, engine=cfg.engine,
            n_runs=cfg.n_runs, seed0=cfg.seed0, jobs=jobs,
        )
    n_failed = 0
    rows = []
    for pt0, pt1 in zip(maps[0].points, maps[1].points):
        for pt in (pt0, pt1):
            if pt.failed:
                n_failed += 1
                print(
                    f"threshold-map: delta={pt.detuning:+.4f} "
                    f"init={int(pt is pt1)} failed: {pt.reason}",
                    file=sys.stderr,
                )
        rows.append(
            (
                pt0.detuning,
                pt0.v_half, pt0.width, int(pt0.failed),
                pt1.v_half, pt1.width, int(pt1.failed),
                int(pt0.near_crossing),
            )
        )
    write_csv(
        f"{outdir}/threshold_map.csv",
        "threshold-map",
        ["detuning_ghz", "v_half_q0", "width_q0", "failed_q0",
         "v_half_q1", "width_q1", "failed_q1", "near_crossing"],
        rows,
        cfg,
        {"crossings": ";".join(
            f"{c.detuning_at_min:.4f}" for c in maps[0].crossings
        )},
    )
    _render("threshold_map_figure", outdir, rows, maps[0].crossings)
    return 4 if n_failed else 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "nonlinearity": cmd_nonlinearity,
    "chirp": cmd_chirp,
    "scurve": cmd_scurve,
    "fidelity": cmd_fidelity,
    "threshold-map": cmd_threshold_map,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chirplock",
        description="Chirped-drive autoresonance simulator for a Kerr cavity "
                    "coupled to a multilevel qubit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} sweep")
        sp.add_argument("--config", required=True, help="INI run configuration")
        sp.add_argument("--out", default=None,
                        help="output directory (overrides run.output)")
        sp.add_argument("--seed", type=int, default=None,
                        help="override run.seed0")
        sp.add_argument("--jobs", type=int, default=1,
                        help="worker processes; never changes results")
        sp.add_argument("--engine", default=None,
                        choices=("semiclassical", "quantum"),
                        help="override run.engine")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed0=args.seed)
        if args.engine is not None:
            cfg = cfg.replace(engine=args.engine)
        if args.out is not None:
            cfg = cfg.replace(output=args.out)
        outdir = ensure_outdir(cfg.output)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, max(1, args.jobs), outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ChirplockError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
