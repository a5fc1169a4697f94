"""Exact diagonalization, bound-state identification and the closed-form
bound/unbound eigenstates of the staggered array.

The closed forms are written for the hopping convention of
:mod:`cca.lattice` (off-diagonals ``-J_x``). In that convention the defect-free
zero mode of an odd-length staggered block alternates in sign,
``C * (-D)**(x-1)`` on block site ``2x-1``, and the unbound-state phase obeys
``exp(i theta_k) = (J1 + J2 exp(-ik)) / E_k``. Both differ from the
opposite-sign-bond gauge only by site-dependent signs, so all moduli, energies
and overlaps are unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CcaError, NoBoundPairError
from .lattice import HoppingMatrix

# relative width used to group numerically degenerate eigenvalues
DEGENERACY_TOL = 1e-10
EDGE_WEIGHT_MIN = 0.5
GAP_SPACING_FACTOR = 3.0


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues with orthonormal, phase-fixed eigenvector columns.

    ``parity`` holds the mirror eigenvalue (+1/-1) of each column when the
    source matrix was a mirror-symmetric :class:`HoppingMatrix`, else None.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    parity: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def vector(self, j: int) -> np.ndarray:
        return self.eigenvectors[:, j]

    def residual(self, h) -> float:
        dense = h if isinstance(h, np.ndarray) else h.to_dense()
        v, w = self.eigenvectors, self.eigenvalues
        return float(np.max(np.abs(dense @ v - v * w)))

    def orthonormality_error(self) -> float:
        v = self.eigenvectors
        return float(np.max(np.abs(v.T @ v - np.eye(self.dim))))


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Flip sign so the largest-magnitude component (lowest index on ties) is positive."""
    mag = np.abs(v)
    top = mag.max()
    if top == 0:
        return v
    i = int(np.argmax(mag >= top * (1 - 1e-9)))
    return -v if v[i] < 0 else v


def _clusters(w: np.ndarray, tol: float) -> list[range]:
    groups, start = [], 0
    for i in range(1, len(w) + 1):
        if i == len(w) or w[i] - w[i - 1] > tol:
            groups.append(range(start, i))
            start = i
    return groups


def diagonalize(h) -> SpectralDecomposition:
    """Dense symmetric eigensolver with deterministic phase fixing.

    Degenerate subspaces of a mirror-symmetric hopping matrix are rotated onto
    mirror eigenstates (even before odd), so e.g. the fully dimerized chain
    returns (|1> +- |N>)/sqrt(2) rather than an arbitrary basis.
    """
    mirror = isinstance(h, HoppingMatrix) and h.is_mirror_symmetric()
    dense = h if isinstance(h, np.ndarray) else h.to_dense()
    dense = np.asarray(dense, dtype=float)
    if dense.ndim != 2 or dense.shape[0] != dense.shape[1] or dense.shape[0] < 1:
        raise CcaError("expected a non-empty square matrix", "invalid_matrix")
    w, v = np.linalg.eigh(dense)
    parity = None
    if mirror:
        tol = DEGENERACY_TOL * max(1.0, float(np.max(np.abs(w))))
        for grp in _clusters(w, tol):
            if len(grp) < 2:
                continue
            cols = v[:, grp.start:grp.stop]
            p_sub = cols.T @ cols[::-1]
            _, rot = np.linalg.eigh((p_sub + p_sub.T) / 2)
            v[:, grp.start:grp.stop] = cols @ rot[:, ::-1]
        parity = np.sign(np.einsum("ij,ij->j", v, v[::-1])).astype(int)
    for j in range(v.shape[1]):
        v[:, j] = fix_phase(v[:, j])
    w.setflags(write=False)
    v.setflags(write=False)
    if parity is not None:
        parity.setflags(write=False)
    return SpectralDecomposition(w, v, parity)


# ---------------------------------------------------------------------------
# closed forms for the defect-free odd block
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticBoundMode:
    m_sites: int
    eta: float
    distortion_ratio: float
    normalization: float
    amplitudes: np.ndarray


def _check_distortion(eta: float) -> None:
    if not np.isfinite(eta) or abs(eta) > 1:
        raise CcaError(f"eta must lie in [-1, 1], got {eta}", "out_of_range")
    if eta == 0:
        raise CcaError("eta = 0 has no bound mode", "no_bound_mode")
    if abs(eta) == 1:
        raise CcaError("|eta| = 1 is the degenerate dimerized limit", "degenerate_distortion")


def _check_odd_block(m_sites: int) -> None:
    if int(m_sites) != m_sites or m_sites < 1 or m_sites % 2 == 0:
        raise CcaError(f"block length must be a positive odd integer, got {m_sites}",
                       "invalid_parity")


def distortion_ratio(eta: float) -> float:
    return (1 + eta) / (1 - eta)


def bound_normalization(m_sites: int, eta: float) -> float:
    d = distortion_ratio(eta)
    return 2 / (eta - 1) * np.sqrt(eta / (d ** (m_sites + 1) - 1))


def analytic_bound_mode(m_sites: int, eta: float) -> AnalyticBoundMode:
    _check_odd_block(m_sites)
    _check_distortion(eta)
    d = distortion_ratio(eta)
    c = bound_normalization(m_sites, eta)
    amp = np.zeros(m_sites)
    x = np.arange((m_sites + 1) // 2)
    amp[2 * x] = c * (-d) ** x
    amp.setflags(write=False)
    return AnalyticBoundMode(int(m_sites), float(eta), float(d), float(c), amp)


def analytic_band_energy(k, eta: float, j_scale: float = 1.0):
    return 2 * j_scale * np.sqrt(np.cos(k / 2) ** 2 + eta ** 2 * np.sin(k / 2) ** 2)


def allowed_momenta(m_sites: int) -> np.ndarray:
    """Band momenta k = 2 pi j / (M+1), j = 1..(M-1)/2, of an odd block."""
    _check_odd_block(m_sites)
    j = np.arange(1, (m_sites - 1) // 2 + 1)
    return 2 * np.pi * j / (m_sites + 1)


def unbound_phase(k: float, eta: float, j_scale: float = 1.0) -> float:
    j1, j2 = (1 + eta) * j_scale, (1 - eta) * j_scale
    return float(np.angle(j1 + j2 * np.exp(-1j * k)))


def analytic_unbound_state(k: float, mu: int, m_sites: int, eta: float,
                           j_scale: float = 1.0) -> np.ndarray:
    """Band eigenvector of the defect-free block with energy ``-mu * E_k``."""
    _check_odd_block(m_sites)
    if mu not in (1, -1):
        raise CcaError("band index mu must be +1 or -1", "invalid_band")
    if not np.isfinite(eta) or abs(eta) > 1:
        raise CcaError(f"eta must lie in [-1, 1], got {eta}", "out_of_range")
    grid = allowed_momenta(m_sites)
    if not np.any(np.isclose(grid, k, rtol=0, atol=1e-9)):
        raise CcaError(f"k = {k} is not an allowed momentum for M = {m_sites}", "off_grid")
    theta = unbound_phase(k, eta, j_scale)
    v = np.zeros(m_sites)
    xe = np.arange(1, (m_sites - 1) // 2 + 1)
    xo = np.arange(1, (m_sites + 1) // 2 + 1)
    v[2 * xe - 1] = np.sin(k * xe)
    v[2 * xo - 2] = mu * np.sin(k * xo + theta)
    return np.sqrt(2 / (m_sites + 1)) * v


# ---------------------------------------------------------------------------
# first-order perturbation theory in the end-cavity defect
# ---------------------------------------------------------------------------

def _check_perturbative(n_sites: int, eta: float) -> int:
    if int(n_sites) != n_sites or n_sites < 2 or n_sites % 2:
        raise CcaError(f"n_sites must be a positive even integer, got {n_sites}",
                       "invalid_parity")
    m = n_sites // 2
    if m % 2 == 0:
        raise CcaError(f"closed forms need N/2 odd, got N = {n_sites}", "invalid_parity")
    _check_distortion(eta)
    return m


def perturbative_bound_pair(n_sites: int, eta: float, j_scale: float = 1.0):
    """First-order bound energies and their splitting.

    Returns ``(omega_b_plus, omega_b_minus, delta_omega)`` where ``b_plus`` is
    the mirror-even state (its block carries the ``-J1`` defect) and
    ``delta_omega`` is the magnitude of the closed-form splitting.
    """
    m = _check_perturbative(n_sites, eta)
    d = distortion_ratio(eta)
    c = bound_normalization(m, eta)
    j1 = (1 + eta) * j_scale
    shift = j1 * c ** 2 * d ** (m - 1)
    dn = d ** (n_sites / 2)
    delta = abs(8 * j_scale * eta / (eta - 1) * dn / (dn * d - 1))
    return -shift, shift, delta


def perturbative_bound_states(n_sites: int, eta: float, j_scale: float = 1.0,
                              order: int = 1):
    """First-order bound states on the full array, as ``(b_plus, b_minus)``.

    Each state is the block zero mode plus the mixing of the band states
    driven by the ``-+J1`` defect on the last block site, renormalized and
    mapped back with (|x> +- |N-x+1>)/sqrt(2).
    """
    m = _check_perturbative(n_sites, eta)
    if order not in (0, 1):
        raise CcaError("order must be 0 or 1", "invalid_order")
    mode = analytic_bound_mode(m, eta)
    j1 = (1 + eta) * j_scale
    amp_last = mode.amplitudes[m - 1]

    correction = np.zeros(m)
    if order == 1 and m > 1:
        ks = allowed_momenta(m)
        x = np.arange(1, (m - 1) // 2 + 1)
        energies = analytic_band_energy(ks, eta, j_scale)
        phases = np.array([unbound_phase(k, eta, j_scale) for k in ks])
        edge = np.sin(ks * (m + 1) / 2 + phases) / energies
        correction[2 * x - 1] = 4 / (m + 1) * amp_last * (np.sin(np.outer(x, ks)) @ edge)

    out = []
    for parity, defect in ((1, -j1), (-1, j1)):
        block = mode.amplitudes + defect * correction
        block = block / np.linalg.norm(block)
        full = np.concatenate([block, parity * block[::-1]]) / np.sqrt(2)
        out.append(fix_phase(full))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# bound pair selection
# ---------------------------------------------------------------------------

def end_to_end_amplitude(state) -> float:
    v = np.asarray(state)
    return float(np.real(np.conj(v[-1]) * v[0]))


def edge_weight(state) -> float:
    v = np.asarray(state)
    return float(abs(v[0]) ** 2 + abs(v[-1]) ** 2)


def cluster_end_to_end(d: SpectralDecomposition, index: int) -> float:
    """End-to-end element <1|P|N> of the projector onto the eigenspace of ``index``.

    Equals the plain end-to-end amplitude for a non-degenerate level; for a
    degenerate level it is basis independent, unlike the per-vector value.
    """
    w = d.eigenvalues
    tol = DEGENERACY_TOL * max(1.0, float(np.max(np.abs(w))))
    members = np.flatnonzero(np.abs(w - w[index]) <= tol)
    v = d.eigenvectors
    return float(np.sum(v[0, members] * v[-1, members]))


@dataclass(frozen=True)
class BoundStatePair:
    """The two mid-gap states, ordered by energy (``minus`` is the lower one)."""

    index_minus: int
    index_plus: int
    omega_minus: float
    omega_plus: float
    gap: float
    states: tuple
    end_to_end: tuple
    edge_weight: tuple
    weak_localization: bool
    isolation: float
    parity: tuple | None = None

    @property
    def mean_abs_end_to_end(self) -> float:
        return float(np.mean(np.abs(self.end_to_end)))

    @property
    def even_index(self) -> int:
        """Index of the mirror-even member (positive end-to-end when unknown)."""
        if self.parity is not None and self.parity[0] != self.parity[1]:
            return self.index_minus if self.parity[0] > 0 else self.index_plus
        return self.index_minus if self.end_to_end[0] >= self.end_to_end[1] else self.index_plus

    @property
    def odd_index(self) -> int:
        return self.index_plus if self.even_index == self.index_minus else self.index_minus

    @property
    def omega_even(self) -> float:
        return self.omega_minus if self.even_index == self.index_minus else self.omega_plus

    @property
    def omega_odd(self) -> float:
        return self.omega_plus if self.even_index == self.index_minus else self.omega_minus


def innermost_pair(d: SpectralDecomposition) -> BoundStatePair:
    """The two eigenstates closest to zero energy, with no localization test.

    Among the states whose |energy| does not exceed the second-smallest one
    (degenerate levels included), the best edge-localized state is taken
    first and its partner is the best-localized remaining one, preferring the
    energy farthest away on ties so a degenerate +-omega manifold still
    yields a split pair.
    """
    if d.dim < 2:
        raise NoBoundPairError("need at least two eigenstates")
    w = d.eigenvalues
    v = d.eigenvectors
    tol = DEGENERACY_TOL * max(1.0, float(np.max(np.abs(w))))
    order = np.argsort(np.abs(w), kind="stable")
    cutoff = abs(w[order[1]]) + tol
    cand = [int(j) for j in order if abs(w[j]) <= cutoff]
    weights = {j: round(edge_weight(v[:, j]), 9) for j in cand}
    first = min(cand, key=lambda j: (-weights[j], j))
    second = min((j for j in cand if j != first),
                 key=lambda j: (-weights[j], -abs(w[j] - w[first]), j))
    lo, hi = sorted((first, second), key=lambda j: (w[j], j))

    rest = np.delete(np.abs(w), [lo, hi])
    isolation = float(rest.min() - max(abs(w[lo]), abs(w[hi]))) if len(rest) else np.inf
    ew = (edge_weight(v[:, lo]), edge_weight(v[:, hi]))
    parity = None if d.parity is None else (int(d.parity[lo]), int(d.parity[hi]))
    return BoundStatePair(
        index_minus=lo, index_plus=hi,
        omega_minus=float(w[lo]), omega_plus=float(w[hi]),
        gap=float(w[hi] - w[lo]),
        states=(v[:, lo].copy(), v[:, hi].copy()),
        end_to_end=(end_to_end_amplitude(v[:, lo]), end_to_end_amplitude(v[:, hi])),
        edge_weight=ew,
        weak_localization=bool(min(ew) < EDGE_WEIGHT_MIN),
        isolation=isolation,
        parity=parity,
    )


def identify_bound_pair(d: SpectralDecomposition) -> BoundStatePair:
    """Innermost pair, rejected when it is neither edge-localized nor isolated.

    Raises :class:`NoBoundPairError` when both states carry less than half
    their weight on the end sites and their distance to the next level does
    not exceed three median level spacings.
    """
    pair = innermost_pair(d)
    spacing = np.median(np.diff(d.eigenvalues)) if d.dim > 2 else 0.0
    localized = max(pair.edge_weight) >= EDGE_WEIGHT_MIN
    isolated = pair.isolation > GAP_SPACING_FACTOR * spacing
    if not localized and not isolated:
        raise NoBoundPairError(
            f"no bound pair: edge weights {pair.edge_weight[0]:.3g}, "
            f"{pair.edge_weight[1]:.3g}; isolation {pair.isolation:.3g} vs "
            f"{GAP_SPACING_FACTOR:g} x median spacing {spacing:.3g}")
    return pair


def band_gap(d: SpectralDecomposition, pair: BoundStatePair) -> float:
    """Gap between the unbound bands, the bound pair excluded."""
    w = np.delete(d.eigenvalues, [pair.index_minus, pair.index_plus])
    upper, lower = w[w > 0], w[w < 0]
    if len(upper) == 0 or len(lower) == 0:
        raise CcaError("spectrum has no unbound states on both sides of zero", "no_band")
    return float(upper.min() - lower.max())
