"""Driven Kerr cavity coupled to a multilevel anharmonic qubit.

The system is a single cavity mode with a weak self-Kerr term, coupled by a
dipole-ladder interaction to a qubit truncated to ``n_levels`` states of a
Duffing ladder. All builders return dense complex matrices on the tensor
space qubit (x) cavity, ordered so that basis index ``q * n_photons + n``
means qubit level ``q`` with ``n`` photons.

Unit contract
-------------
Every frequency, energy, coupling, and decay rate at this API is an ordinary
frequency in GHz; times are in ns. Factors of 2*pi live inside the time
integrators and in the collapse-operator prefactors, nowhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, ModelError

TWO_PI = 2.0 * np.pi

# Dense diagonalization and vectorized master equations get expensive fast;
# anything larger than this should be rethought, not brute-forced.
MAX_HILBERT_DIM = 4096

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class SystemParams:
    """Physical and numerical parameters of the coupled system.

    Defaults describe the device this package was written around: a 5.3445
    GHz cavity with quality factor 9e3 and a weak self-Kerr of -60 kHz,
    coupled at 118 MHz to a transmon-like ladder with E_J = 100 GHz and
    E_C = 0.28 GHz, qubit lifetime 1 us.

    Attributes
    ----------
    cavity_freq : float
        Bare cavity frequency omega_r (GHz).
    kerr : float
        Cavity self-Kerr coefficient K (GHz); the cavity ladder is
        omega_r * n + K * n * (n - 1). Negative K softens.
    ej, ec : float
        Josephson and charging energies (GHz) of the qubit ladder. They set
        the anharmonicity; the absolute qubit frequency is pinned by
        `detuning` instead (see `build_hamiltonian`).
    g01 : float
        Dipole coupling between the two lowest qubit levels (GHz). Higher
        rungs scale as g01 * sqrt(i + 1).
    detuning : float
        Qubit-cavity detuning Delta (GHz); qubit 0->1 frequency is
        cavity_freq + detuning. The primary control axis.
    n_levels, n_photons : int
        Qubit and cavity truncation (>= 2 each).
    quality_factor : float
        Cavity Q; used to derive kappa when kappa is None.
    kappa : float or None
        Cavity energy decay rate (GHz). None means cavity_freq / Q.
    gamma1 : float
        Qubit energy decay rate (GHz); 1 / (2*pi*T1) for T1 in ns. May be 0.
    """

    cavity_freq: float = 5.3445
    kerr: float = -6.0e-5
    ej: float = 100.0
    ec: float = 0.28
    g01: float = 0.118
    detuning: float = -2.64
    n_levels: int = 7
    n_photons: int = 10
    quality_factor: float = 9.0e3
    kappa: float | None = None
    gamma1: float = 1.0 / (TWO_PI * 1.0e3)

    def __post_init__(self):
        if self.cavity_freq <= 0:
            raise ModelError("cavity_freq must be positive")
        if self.ej <= 0 or self.ec <= 0:
            raise ModelError("ej and ec must be positive")
        if self.n_levels < 2:
            raise ModelError("n_levels must be at least 2 (qubit needs two states)")
        if self.n_photons < 2:
            raise ModelError("n_photons must be at least 2")
        if self.g01 < 0:
            raise ModelError("g01 must be non-negative")
        if self.quality_factor <= 0:
            raise ModelError("quality_factor must be positive")
        if self.kappa is None:
            object.__setattr__(self, "kappa", self.cavity_freq / self.quality_factor)
        if self.kappa <= 0:
            raise ModelError("kappa must be positive (open cavity assumed)")
        if self.gamma1 < 0:
            raise ModelError("gamma1 must be non-negative")

    @property
    def qubit_freq(self) -> float:
        """Qubit 0->1 transition frequency (GHz)."""
        return self.cavity_freq + self.detuning

    @property
    def dim(self) -> int:
        return self.n_levels * self.n_photons

    def with_(self, **changes) -> "SystemParams":
        """Copy with fields replaced; `kappa` re-derives from Q unless given."""
        if "kappa" not in changes and "quality_factor" in changes:
            changes["kappa"] = None
        return replace(self, **changes)


def transmon_levels(ej: float, ec: float, n_levels: int) -> np.ndarray:
    """Duffing-ladder energies of an anharmonic qubit, relative to level 0.

    eps_i = i * (sqrt(8 ej ec) - ec) - (ec / 2) * i * (i - 1)

    Valid for ej >> ec. The ladder spacing shrinks by ec per rung; asking for
    levels past the spectrum inversion point is rejected because the model
    stops meaning anything there.

    Returns
    -------
    ndarray, shape (n_levels,), eps_0 = 0, in GHz.
    """
    if ej <= 0 or ec <= 0:
        raise ModelError("ej and ec must be positive")
    if ej / ec < 20:
        raise ModelError(
            f"ej/ec = {ej / ec:.1f} is outside the anharmonic-ladder regime "
            "(need ej/ec >~ 20)"
        )
    i = np.arange(n_levels, dtype=float)
    omega01 = np.sqrt(8.0 * ej * ec) - ec
    eps = i * omega01 - 0.5 * ec * i * (i - 1.0)
    spacing = np.diff(eps)
    if np.any(spacing <= 0):
        bad = int(np.argmax(spacing <= 0))
        max_levels = int(np.floor(omega01 / ec)) + 1
        raise ModelError(
            f"ladder inverts at level {bad + 1}: spacing {spacing[bad]:.4f} GHz; "
            f"at ej={ej}, ec={ec} keep n_levels <= {max_levels}"
        )
    return eps


def coupling_matrix(g01: float, n_levels: int) -> np.ndarray:
    """Nearest-neighbor dipole ladder g_{i,i+1} = g01 * sqrt(i + 1), symmetric."""
    g = np.zeros((n_levels, n_levels))
    rungs = g01 * np.sqrt(np.arange(1, n_levels, dtype=float))
    g[np.arange(n_levels - 1), np.arange(1, n_levels)] = rungs
    g[np.arange(1, n_levels), np.arange(n_levels - 1)] = rungs
    return g


def destroy(n: int) -> np.ndarray:
    """Truncated bosonic annihilation operator, a[i, i+1] = sqrt(i + 1)."""
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)


def qubit_lowering(n_levels: int) -> np.ndarray:
    """Ladder lowering operator on the qubit, b[i, i+1] = sqrt(i + 1)."""
    return destroy(n_levels)


def _check_dim(p: SystemParams):
    if p.dim > MAX_HILBERT_DIM:
        raise DimensionError(
            f"Hilbert space dimension {p.n_levels} x {p.n_photons} = {p.dim} "
            f"exceeds the supported maximum {MAX_HILBERT_DIM}; reduce n_photons "
            f"to <= {MAX_HILBERT_DIM // p.n_levels} at this n_levels, or use the "
            "semiclassical engine for large fields"
        )


def qubit_energies(p: SystemParams) -> np.ndarray:
    """Qubit ladder pinned so the 0->1 spacing equals cavity_freq + detuning.

    ej and ec fix the shape of the ladder (anharmonicity -ec per rung); the
    whole ladder is then rigidly shifted so detuning is an independent knob.
    """
    eps = transmon_levels(p.ej, p.ec, p.n_levels)
    omega01 = eps[1] - eps[0]
    return eps + (p.qubit_freq - omega01) * np.arange(p.n_levels)


def build_hamiltonian(p: SystemParams, rwa: bool = False) -> np.ndarray:
    """Full system Hamiltonian on the qubit (x) cavity tensor space, in GHz.

    H = omega_r a'a + K a'a'aa + sum_i eps_i |i><i|
        + sum_ij g_ij |i><j| (a' + a)

    With ``rwa=True`` only the excitation-conserving half of the coupling is
    kept (|i><i+1| a' + h.c.), which makes H commute with the total
    excitation operator when K = 0.

    Raises
    ------
    DimensionError
        If n_levels * n_photons exceeds MAX_HILBERT_DIM.
    """
    _check_dim(p)
    nq, nc = p.n_levels, p.n_photons
    a = destroy(nc)
    n_cav = np.arange(nc, dtype=float)
    h_cav = np.diag(p.cavity_freq * n_cav + p.kerr * n_cav * (n_cav - 1.0)).astype(
        complex
    )
    h_qub = np.diag(qubit_energies(p)).astype(complex)
    ident_q = np.eye(nq, dtype=complex)
    ident_c = np.eye(nc, dtype=complex)

    h = np.kron(ident_q, h_cav) + np.kron(h_qub, ident_c)
    if p.g01 != 0.0:
        g = coupling_matrix(p.g01, nq).astype(complex)
        if rwa:
            # keep |i><i+1| a' + |i+1><i| a: qubit down, photon up, and h.c.
            g_down = np.triu(g)
            h = h + np.kron(g_down, a.conj().T) + np.kron(g_down.T, a)
        else:
            h = h + np.kron(g, a + a.conj().T)
    assert_hermitian(h, HERMITICITY_TOL)
    return h


def drive_operator(p: SystemParams) -> np.ndarray:
    """Cavity quadrature drive, identity (x) (a' + a)."""
    _check_dim(p)
    a = destroy(p.n_photons)
    return np.kron(np.eye(p.n_levels, dtype=complex), a + a.conj().T)


def cavity_number(p: SystemParams) -> np.ndarray:
    _check_dim(p)
    return np.kron(
        np.eye(p.n_levels, dtype=complex),
        np.diag(np.arange(p.n_photons, dtype=complex)),
    )


def cavity_annihilation(p: SystemParams) -> np.ndarray:
    _check_dim(p)
    return np.kron(np.eye(p.n_levels, dtype=complex), destroy(p.n_photons))


def excitation_operator(p: SystemParams) -> np.ndarray:
    """Total excitation number: qubit level index plus photon number."""
    _check_dim(p)
    return np.kron(
        np.diag(np.arange(p.n_levels, dtype=complex)),
        np.eye(p.n_photons, dtype=complex),
    ) + cavity_number(p)


def collapse_operators(p: SystemParams) -> list[np.ndarray]:
    """Lindblad collapse operators in 1/sqrt(ns) units.

    sqrt(2 pi kappa) * a for cavity loss, always present; plus
    sqrt(2 pi gamma1) * b (qubit ladder lowering) when gamma1 > 0. The 2 pi
    converts the GHz rates to angular rates so that c'c pairs directly with
    a Hamiltonian expressed in rad/ns.
    """
    _check_dim(p)
    ops = [np.sqrt(TWO_PI * p.kappa) * cavity_annihilation(p)]
    if p.gamma1 > 0:
        ops.append(
            np.sqrt(TWO_PI * p.gamma1)
            * np.kron(qubit_lowering(p.n_levels), np.eye(p.n_photons, dtype=complex))
        )
    return ops


def is_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL) -> bool:
    scale = max(float(np.max(np.abs(m))), 1.0)
    return bool(np.max(np.abs(m - m.conj().T)) <= tol * scale)


def assert_hermitian(m: np.ndarray, tol: float = HERMITICITY_TOL):
    if not is_hermitian(m, tol):
        raise ModelError("matrix is not Hermitian within tolerance")


def basis_state(p: SystemParams, qubit: int, photons: int) -> np.ndarray:
    """Bare product state |qubit, photons> as a unit vector."""
    if not (0 <= qubit < p.n_levels and 0 <= photons < p.n_photons):
        raise ModelError(
            f"state ({qubit}, {photons}) outside truncation "
            f"({p.n_levels} levels, {p.n_photons} photons)"
        )
    psi = np.zeros(p.dim, dtype=complex)
    psi[qubit * p.n_photons + photons] = 1.0
    return psi
