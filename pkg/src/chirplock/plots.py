"""Figure rendering for the CLI report path.

This is the only module that imports matplotlib; the computational library
never does. Each function takes the already-computed data and writes one PNG
next to the corresponding CSV.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 150


def _save(fig, outdir: str, stem: str):
    fig.tight_layout()
    fig.savefig(f"{outdir}/{stem}.png", dpi=DPI)
    plt.close(fig)


def spectrum_figure(outdir: str, branches, crossings):
    fig, ax = plt.subplots(figsize=(7, 5))
    for b in branches:
        manifold = b.label[0] + b.label[1]
        ax.plot(b.detunings, b.energies, lw=1.0,
                label=f"|{b.label[0]},{b.label[1]}>" if manifold <= 2 else None)
    for c in crossings:
        ax.axvline(c.detuning_at_min, color="0.8", lw=0.6, zorder=0)
    ax.set_xlabel("detuning (GHz)")
    ax.set_ylabel("energy (GHz)")
    ax.set_title("dressed levels and avoided crossings")
    if any(b.label[0] + b.label[1] <= 2 for b in branches):
        ax.legend(fontsize=7, ncol=2)
    _save(fig, outdir, "branches")


def nonlinearity_figure(outdir: str, rows, with_dynamic: bool):
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.plot(rows[:, 0], rows[:, 1], "o-", ms=3, label="spectral fit")
    ax.plot(rows[:, 0], rows[:, 2], "s--", ms=3, label="classical model")
    if with_dynamic:
        ax.plot(rows[:, 0], rows[:, 3], "^:", ms=3, label="dynamic probe")
    ax.set_xlabel("detuning (GHz)")
    ax.set_ylabel("lambda (GHz)")
    ax.set_title("effective cavity nonlinearity")
    ax.legend(fontsize=8)
    _save(fig, outdir, "nonlinearity")


def chirp_figure(outdir: str, rows):
    rows = np.asarray(rows, dtype=float)
    amps = np.unique(rows[:, 0])
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for amp in amps:
        sel = rows[:, 0] == amp
        ax.plot(rows[sel, 1], rows[sel, 2], lw=0.8, alpha=0.5)
        ax.plot(rows[sel, 1], rows[sel, 3], lw=1.6,
                label=f"V = {amp:.4g} GHz")
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("cavity occupation")
    ax.set_title("chirp transients (thin: single shot, thick: ensemble mean)")
    ax.legend(fontsize=8)
    _save(fig, outdir, "chirp_transients")


def scurve_figure(outdir: str, amps, probs, errs, meta):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(amps, probs, yerr=errs, fmt="o-", ms=3, capsize=2)
    if "fit.v_half" in meta:
        ax.axvline(meta["fit.v_half"], color="0.6", ls="--", lw=0.8,
                   label=f"v_half = {meta['fit.v_half']:.4g}")
        ax.legend(fontsize=8)
    ax.set_xlabel("drive amplitude (GHz)")
    ax.set_ylabel("capture probability")
    ax.set_ylim(-0.03, 1.03)
    _save(fig, outdir, "scurve")


def fidelity_figure(outdir: str, amps, p0, e0, p1, e1, meta):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.errorbar(amps, p0, yerr=e0, fmt="o-", ms=3, capsize=2, label="init |0>")
    ax.errorbar(amps, p1, yerr=e1, fmt="s-", ms=3, capsize=2, label="init |1>")
    if "fidelity.v_opt" in meta:
        ax.axvline(meta["fidelity.v_opt"], color="0.6", ls="--", lw=0.8)
        ax.set_title(f"f_raw = {meta['fidelity.f_raw']:.3f} at "
                     f"V = {meta['fidelity.v_opt']:.4g} GHz")
    ax.set_xlabel("drive amplitude (GHz)")
    ax.set_ylabel("capture probability")
    ax.set_ylim(-0.03, 1.03)
    ax.legend(fontsize=8)
    _save(fig, outdir, "fidelity")


def threshold_map_figure(outdir: str, rows, crossings):
    rows = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ok0 = rows[:, 3] == 0
    ok1 = rows[:, 6] == 0
    ax.errorbar(rows[ok0, 0], rows[ok0, 1], yerr=rows[ok0, 2], fmt="o-",
                ms=3, capsize=2, label="init |0>")
    ax.errorbar(rows[ok1, 0], rows[ok1, 4], yerr=rows[ok1, 5], fmt="s-",
                ms=3, capsize=2, label="init |1>")
    for c in crossings:
        ax.axvline(c.detuning_at_min, color="0.85", lw=0.8, zorder=0)
    ax.set_xlabel("detuning (GHz)")
    ax.set_ylabel("threshold amplitude (GHz)")
    ax.set_title("capture threshold vs detuning (bars: S-curve width)")
    ax.legend(fontsize=8)
    _save(fig, outdir, "threshold_map")
