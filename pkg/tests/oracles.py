"""Independent reference computations used by the test suite.

Everything here is deliberately written against the raw linear algebra, not
against the package's own propagators, so the tests compare two genuinely
different routes to the same physics.
"""

import numpy as np
from scipy.linalg import expm

TWO_PI = 2.0 * np.pi


def lindblad_superoperator(h_ghz: np.ndarray, c_ops) -> np.ndarray:
    """Column-stacked Liouvillian for dρ/dt = L ρ.

    h_ghz is a Hamiltonian in ordinary-frequency GHz; collapse operators are
    used as given (their 2π lives in the amplitude already).
    """
    h = TWO_PI * np.asarray(h_ghz, dtype=complex)
    dim = h.shape[0]
    eye = np.eye(dim, dtype=complex)
    lio = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for c in c_ops:
        c = np.asarray(c, dtype=complex)
        cdc = c.conj().T @ c
        lio += np.kron(c.conj(), c)
        lio -= 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye))
    return lio


def propagate_density_matrix(rho0: np.ndarray, lio: np.ndarray, t: float) -> np.ndarray:
    dim = rho0.shape[0]
    vec = rho0.reshape(-1, order="F")
    out = expm(lio * t) @ vec
    return out.reshape((dim, dim), order="F")


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(rho - sigma)
    return 0.5 * float(np.sum(np.abs(evals)))


def jc_dressed_ground_energies(wr: float, wq: float, g: float, n_max: int) -> np.ndarray:
    """Exact RWA Jaynes-Cummings energies of the branch adiabatically
    connected to |qubit ground, n photons>, for n = 0..n_max.

    In each excitation manifold n >= 1 the two levels are
    (n - 1/2) wr + wq/2 +- sqrt(delta^2/4 + g^2 n), delta = wq - wr.
    Bare |g,n> sits at n wr and bare |e,n-1> at n wr + delta, so the
    ground branch is the lower root for delta > 0 and the upper root for
    delta < 0.
    """
    delta = wq - wr
    e = np.empty(n_max + 1)
    e[0] = 0.0
    for n in range(1, n_max + 1):
        mid = (n - 0.5) * wr + 0.5 * wq
        split = np.sqrt(0.25 * delta**2 + g**2 * n)
        e[n] = mid - split if delta > 0 else mid + split
    return e - e[0]


def quadratic_energy_fit(levels: np.ndarray):
    """Fit E(n) = eps + omega n + lam_coeff n^2; returns (eps, omega, -lam_coeff).

    Mirrors the sign convention where a softening ladder (levels bending
    down) gives a positive third return value.
    """
    n = np.arange(levels.size, dtype=float)
    design = np.vstack([np.ones_like(n), n, n * n]).T
    coef, *_ = np.linalg.lstsq(design, levels, rcond=None)
    return float(coef[0]), float(coef[1]), float(-coef[2])


def logistic_samples(rng, v_grid, v_half, width_1090, n_per_point):
    """Binomial draws from a logistic S-curve; width is the 10-90% span."""
    w = width_1090 / np.log(81.0)
    probs = 1.0 / (1.0 + np.exp(-(np.asarray(v_grid) - v_half) / w))
    hits = rng.binomial(n_per_point, probs)
    return hits / n_per_point, probs
