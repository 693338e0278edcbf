"""Dressed-level structure of the coupled system.

Eigenlevels are labeled by the bare product state (q, n) they connect to
adiabatically. Two continuation paths are used:

* `track_branches` walks a sorted detuning grid, seeding labels at the edge
  farthest from resonance and carrying them point to point by maximum
  eigenvector overlap (a one-to-one assignment, never a greedy guess).
* `labeled_energies` labels the levels of a single operating point by
  switching the coupling on smoothly, 0 -> g01, at fixed detuning. Detuning
  grid points stay independent this way, so parameter maps parallelize.

Both paths refine their step whenever consecutive eigenvectors overlap worse
than `OVERLAP_FLOOR`, and record an ambiguity flag whenever the best and
second-best candidate overlaps come within `AMBIGUITY_TOL` of each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import LabelingError, ModelError
from .model import SystemParams, build_hamiltonian, is_hermitian

OVERLAP_FLOOR = 0.5
AMBIGUITY_TOL = 1e-3
_MAX_REFINE_DEPTH = 16


@dataclass
class Branch:
    """One adiabatically labeled eigenlevel over a detuning grid.

    Attributes
    ----------
    label : (q, n)
        Bare qubit level and photon number the branch connects to.
    detunings : ndarray
        The grid (GHz), sorted ascending.
    energies : ndarray
        Eigenenergy at each grid point (GHz).
    overlap_trace : ndarray
        Fidelity |<bare label|eigenvector>|^2 at each grid point, in [0, 1].
    ambiguous : list[int]
        Grid indices where the continuation assignment was ambiguous
        (two candidates within AMBIGUITY_TOL); labels there are a flagged
        choice, not a certainty.
    """

    label: tuple[int, int]
    detunings: np.ndarray
    energies: np.ndarray
    overlap_trace: np.ndarray
    ambiguous: list[int] = field(default_factory=list)


@dataclass(frozen=True)
class AvoidedCrossing:
    """Local minimum of the energy gap between two labeled branches."""

    pair: tuple[tuple[int, int], tuple[int, int]]
    detuning_at_min: float
    gap: float
    manifold: int

    def __post_init__(self):
        if self.gap <= 0:
            raise ModelError("avoided-crossing gap must be positive")


@dataclass(frozen=True)
class EffectiveParams:
    """Quadratic ladder fit E(0, n) ~ eps + omega n - lam n^2 (GHz).

    Positive `lam` means the ladder softens with n.
    """

    eps: float
    omega: float
    lam: float
    fit_residual: float


def eigenspectrum(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and eigenvectors of a Hermitian matrix.

    Raises ModelError on non-Hermitian input rather than symmetrizing it.
    """
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ModelError("eigenspectrum needs a square matrix")
    if not is_hermitian(h, 1e-10):
        raise ModelError("eigenspectrum input is not Hermitian")
    return np.linalg.eigh(h)


def _assign(vecs_a: np.ndarray, vecs_b: np.ndarray):
    """One-to-one branch assignment between two eigenvector sets.

    Returns (cols, matched, runner_up): branch i of A continues as column
    cols[i] of B with overlap matched[i]; runner_up[i] is the best overlap
    among the other columns, for ambiguity detection.
    """
    m = np.abs(vecs_a.conj().T @ vecs_b)
    rows, cols = linear_sum_assignment(-m)
    matched = m[rows, cols]
    masked = m.copy()
    masked[rows, cols] = -1.0
    runner_up = masked.max(axis=1)
    return cols, matched, runner_up


def _march(h_func, s_a, s_b, vecs_a, depth=_MAX_REFINE_DEPTH):
    """Carry labels from s_a to s_b, bisecting the step if overlaps drop.

    Returns (vals, vecs, ambiguous_mask) at s_b, columns ordered by branch.
    """
    vals_b, vecs_b = np.linalg.eigh(h_func(s_b))
    cols, matched, runner_up = _assign(vecs_a, vecs_b)
    if matched.min() >= OVERLAP_FLOOR:
        ambiguous = (matched - runner_up) < AMBIGUITY_TOL
        return vals_b[cols], vecs_b[:, cols], ambiguous
    if depth <= 0:
        raise LabelingError(
            f"branch continuation lost between s={s_a:.6g} and s={s_b:.6g}: "
            f"best overlap {matched.min():.3f} < {OVERLAP_FLOOR} at maximum "
            "refinement depth"
        )
    mid = 0.5 * (s_a + s_b)
    if mid in (s_a, s_b):
        raise LabelingError("continuation step underflow")
    _, vecs_m, _ = _march(h_func, s_a, mid, vecs_a, depth - 1)
    return _march(h_func, mid, s_b, vecs_m, depth - 1)


def track_branches(
    p: SystemParams,
    detunings: np.ndarray,
    max_excitation: int | None = None,
    rwa: bool = False,
) -> list[Branch]:
    """Label eigenlevels across a sorted detuning grid.

    Labels are seeded at the grid edge with the largest |detuning| (where
    dressing is weakest) and continued across the grid by assignment on
    eigenvector overlaps. Branches are returned for every bare label with
    q + n <= max_excitation (all labels when None), sorted by label.

    Ambiguous assignments are flagged per grid point on each Branch; exact
    degeneracies are physical and do not raise.
    """
    detunings = np.asarray(detunings, dtype=float)
    if detunings.ndim != 1 or detunings.size < 2:
        raise ModelError("need a 1-d detuning grid with at least 2 points")
    if np.any(np.diff(detunings) <= 0):
        raise ModelError("detunings must be sorted strictly ascending")

    def h_at(d: float) -> np.ndarray:
        return build_hamiltonian(p.with_(detuning=float(d)), rwa=rwa)

    npts = detunings.size
    dim = p.dim
    # seed at the far-detuned edge, then walk toward the other end
    forward = abs(detunings[0]) >= abs(detunings[-1])
    order = range(npts) if forward else range(npts - 1, -1, -1)
    order = list(order)

    energies = np.empty((dim, npts))
    overlap = np.empty((dim, npts))
    ambiguous: list[list[int]] = [[] for _ in range(dim)]

    vals, vecs = np.linalg.eigh(h_at(detunings[order[0]]))
    cols, matched, runner_up = _assign(np.eye(dim, dtype=complex), vecs)
    vals, vecs = vals[cols], vecs[:, cols]
    amb = (matched - runner_up) < AMBIGUITY_TOL
    energies[:, order[0]] = vals
    overlap[:, order[0]] = np.abs(np.diag(vecs)) ** 2
    for b in np.nonzero(amb)[0]:
        ambiguous[b].append(order[0])

    for k_prev, k in zip(order[:-1], order[1:]):
        vals, vecs, amb = _march(h_at, detunings[k_prev], detunings[k], vecs)
        energies[:, k] = vals
        overlap[:, k] = np.abs(np.diag(vecs)) ** 2
        for b in np.nonzero(amb)[0]:
            ambiguous[b].append(k)

    branches = []
    for b in range(dim):
        q, n = divmod(b, p.n_photons)
        if max_excitation is not None and q + n > max_excitation:
            continue
        branches.append(
            Branch(
                label=(q, n),
                detunings=detunings.copy(),
                energies=energies[b].copy(),
                overlap_trace=overlap[b].copy(),
                ambiguous=sorted(ambiguous[b]),
            )
        )
    branches.sort(key=lambda br: br.label)
    return branches


def _parabolic_min(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Vertex of the parabola through three points; falls back to the middle
    sample when the fit is not a genuine interior minimum."""
    c = np.polyfit(x, y, 2)
    if c[0] > 0:
        xv = -c[1] / (2 * c[0])
        if x[0] <= xv <= x[2]:
            yv = np.polyval(c, xv)
            if yv > 0:
                return float(xv), float(yv)
    return float(x[1]), float(y[1])


def find_avoided_crossings(branches: list[Branch], manifold: int) -> list[AvoidedCrossing]:
    """Locate avoided crossings within one excitation manifold.

    Scans every energy-adjacent pair of branches with q + n == manifold for
    interior local minima of their gap over the detuning grid, refining each
    minimum with a parabola through the three bracketing samples. Monotone
    gaps produce no report.
    """
    members = [b for b in branches if sum(b.label) == manifold]
    if len(members) < 2:
        return []
    grid = members[0].detunings
    for b in members[1:]:
        if not np.array_equal(b.detunings, grid):
            raise ModelError("branches were tracked on different grids")
    all_energies = np.array([b.energies for b in members])

    out = []
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            gap = np.abs(members[i].energies - members[j].energies)
            interior = (gap[1:-1] <= gap[:-2]) & (gap[1:-1] <= gap[2:])
            for k in np.nonzero(interior)[0] + 1:
                # adjacency in energy at the minimum: nothing from the same
                # manifold may sit strictly between the pair
                lo = min(members[i].energies[k], members[j].energies[k])
                hi = max(members[i].energies[k], members[j].energies[k])
                col = all_energies[:, k]
                between = np.sum((col > lo) & (col < hi))
                if between > 0:
                    continue
                d_min, g_min = _parabolic_min(grid[k - 1 : k + 2], gap[k - 1 : k + 2])
                out.append(
                    AvoidedCrossing(
                        pair=(members[i].label, members[j].label),
                        detuning_at_min=d_min,
                        gap=g_min,
                        manifold=manifold,
                    )
                )
    out.sort(key=lambda c: (c.detuning_at_min, c.pair))
    return out


def labeled_energies(
    p: SystemParams,
    labels: list[tuple[int, int]],
    rwa: bool = False,
) -> dict[tuple[int, int], float]:
    """Adiabatic labels at a single operating point, by coupling continuation.

    Diagonalizes at couplings g01 * s for s walking 0 -> 1 (quadratically
    spaced, denser near zero where mixing angles move fastest) and carries
    bare labels to the interacting spectrum. Independent per call, so
    detuning maps can evaluate points in any order or in parallel.
    """
    for q, n in labels:
        if not (0 <= q < p.n_levels and 0 <= n < p.n_photons):
            raise ModelError(f"label ({q}, {n}) outside truncation")
    dim = p.dim

    if p.g01 == 0.0:
        h = build_hamiltonian(p, rwa=rwa)
        diag = np.real(np.diag(h))
        return {(q, n): float(diag[q * p.n_photons + n]) for q, n in labels}

    def h_at(s: float) -> np.ndarray:
        return build_hamiltonian(p.with_(g01=p.g01 * float(s)), rwa=rwa)

    s_grid = np.linspace(0.0, 1.0, 25) ** 2
    vals, vecs = np.linalg.eigh(h_at(s_grid[0]))  # s=0: bare, already labeled
    cols, _, _ = _assign(np.eye(dim, dtype=complex), vecs)
    vals, vecs = vals[cols], vecs[:, cols]
    for s_a, s_b in zip(s_grid[:-1], s_grid[1:]):
        vals, vecs, _ = _march(h_at, s_a, s_b, vecs)
    return {(q, n): float(vals[q * p.n_photons + n]) for q, n in labels}


def effective_params(p: SystemParams, n_fit: int = 4, rwa: bool = False) -> EffectiveParams:
    """Effective cavity ladder seen from the qubit ground state.

    Least-squares fit of the labeled energies E(0, n), n = 0..n_fit, to
    eps + omega n - lam n^2. Positive lam means the drive must chirp downward
    to stay locked.

    Raises LabelingError if the (0, n) labels cannot be continued to the
    operating point, and ModelError if n_fit does not leave at least one
    degree of freedom or exceeds the photon truncation.
    """
    if n_fit < 3:
        raise ModelError("n_fit >= 3 needed to constrain a quadratic with slack")
    if n_fit >= p.n_photons:
        raise ModelError(
            f"n_fit = {n_fit} requires n_photons > {n_fit} (have {p.n_photons})"
        )
    labels = [(0, n) for n in range(n_fit + 1)]
    levels = labeled_energies(p, labels, rwa=rwa)
    n = np.arange(n_fit + 1, dtype=float)
    e = np.array([levels[(0, int(k))] for k in n])
    design = np.column_stack([np.ones_like(n), n, n * n])
    coef, _, _, _ = np.linalg.lstsq(design, e, rcond=None)
    resid = e - design @ coef
    return EffectiveParams(
        eps=float(coef[0]),
        omega=float(coef[1]),
        lam=float(-coef[2]),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
    )


def dispersive_shift(p: SystemParams, qubit_state: int, rwa: bool = False) -> float:
    """Cavity pull for a given qubit state: E(q,1) - E(q,0) - cavity_freq."""
    if not (0 <= qubit_state < p.n_levels):
        raise ModelError(f"qubit_state {qubit_state} outside truncation")
    levels = labeled_energies(
        p, [(qubit_state, 0), (qubit_state, 1)], rwa=rwa
    )
    return levels[(qubit_state, 1)] - levels[(qubit_state, 0)] - p.cavity_freq
