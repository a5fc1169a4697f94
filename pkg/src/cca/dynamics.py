"""Single-excitation time evolution by spectral sums.

Every amplitude is evaluated as ``sum_j exp(-i w_j t) <bra|v_j><v_j|ket>``,
exact for a time-independent Hamiltonian, so no step-size error enters.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import CcaError, ZeroGapError
from .spectral import BoundStatePair, SpectralDecomposition

POINTS_PER_PERIOD = 40
# spectral sums are evaluated in row blocks of this many time points
_CHUNK = 8192


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise CcaError(f"n_points must be an integer >= 2, got {self.n_points}",
                           "invalid_grid")
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end)):
            raise CcaError("grid endpoints must be finite", "invalid_grid")
        if not self.t_end > self.t_start:
            raise CcaError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})",
                           "invalid_grid")

    @cached_property
    def points(self) -> np.ndarray:
        t = np.linspace(self.t_start, self.t_end, int(self.n_points))
        t.setflags(write=False)
        return t

    @property
    def step(self) -> float:
        return (self.t_end - self.t_start) / (self.n_points - 1)

    @classmethod
    def resolved(cls, d: SpectralDecomposition, t_end: float, t_start: float = 0.0,
                 per_period: int = POINTS_PER_PERIOD) -> "TimeGrid":
        """Uniform grid with at least ``per_period`` points per shortest period."""
        dt = shortest_period(d) / per_period
        n = int(np.ceil((t_end - t_start) / dt)) + 1
        return cls(t_start, t_end, max(n, 2))


def shortest_period(d: SpectralDecomposition) -> float:
    width = float(d.eigenvalues[-1] - d.eigenvalues[0])
    return 2 * np.pi / width if width > 0 else np.inf


@dataclass(frozen=True)
class AmplitudeSeries:
    grid: TimeGrid
    values: np.ndarray
    source: object
    target: object

    @property
    def abs(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def fidelity(self) -> np.ndarray:
        return average_fidelity(self.abs)


@dataclass(frozen=True)
class ProbabilitySeries:
    """Occupation probabilities of selected sites plus the rest ("bulk")."""

    grid: TimeGrid
    sites: tuple
    site_probabilities: np.ndarray  # (n_points, len(sites))
    bulk: np.ndarray
    total: np.ndarray

    def of(self, site: int) -> np.ndarray:
        return self.site_probabilities[:, self.sites.index(site)]


def _weights(d: SpectralDecomposition, bra, ket) -> np.ndarray:
    v = d.eigenvectors
    return (np.conj(np.asarray(bra)) @ v) * (v.T @ np.asarray(ket))


def spectral_amplitude(d: SpectralDecomposition, bra, ket, times) -> np.ndarray:
    """<bra| exp(-iHt) |ket> at each time."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    wts = _weights(d, bra, ket)
    out = np.empty(len(times), dtype=complex)
    for s in range(0, len(times), _CHUNK):
        t = times[s:s + _CHUNK]
        out[s:s + _CHUNK] = np.exp(-1j * np.outer(t, d.eigenvalues)) @ wts
    return out


def _basis(dim: int, index: int) -> np.ndarray:
    if not -dim <= index < dim:
        raise CcaError(f"site index {index} out of range for dimension {dim}",
                       "index_out_of_range")
    e = np.zeros(dim)
    e[index] = 1.0
    return e


def evolve_amplitude(d: SpectralDecomposition, source: int, target: int,
                     grid: TimeGrid) -> AmplitudeSeries:
    """Transition amplitude <target| exp(-iHt) |source> (0-based site indices)."""
    bra, ket = _basis(d.dim, target), _basis(d.dim, source)
    values = spectral_amplitude(d, bra, ket, grid.points)
    return AmplitudeSeries(grid, values, source, target)


def average_fidelity(abs_f):
    """Bloch-sphere averaged transfer fidelity 1/2 + |f|/3 + |f|^2/6."""
    a = np.asarray(abs_f, dtype=float)
    if np.any(a < 0) or np.any(a > 1 + 1e-9) or np.any(~np.isfinite(a)):
        raise CcaError("|f| must lie in [0, 1]", "out_of_range")
    a = np.minimum(a, 1.0)
    out = 0.5 + a / 3 + a ** 2 / 6
    return float(out) if out.ndim == 0 else out


def rabi_amplitude(pair: BoundStatePair, grid: TimeGrid) -> np.ndarray:
    """Two-level estimate 2 |<a1+ aN>| |sin(dw t / 2)|."""
    if not pair.gap > 0:
        raise ZeroGapError("bound-pair gap is zero: the Rabi period is infinite")
    return 2 * pair.mean_abs_end_to_end * np.abs(np.sin(pair.gap * grid.points / 2))


def transfer_time(pair: BoundStatePair, resolution: float = 0.0) -> float:
    """Rabi-like transfer period 2 pi / dw.

    ``resolution`` is the smallest gap treated as nonzero; splittings below it
    are indistinguishable from round-off of the eigensolver.
    """
    if not pair.gap > resolution:
        raise ZeroGapError(f"bound-pair gap {pair.gap:.3g} is unresolvable "
                           f"(<= {resolution:.3g}); transfer time is infinite")
    return 2 * np.pi / pair.gap


def site_probabilities(d: SpectralDecomposition, initial, grid: TimeGrid,
                       sites) -> ProbabilitySeries:
    initial = np.asarray(initial)
    if initial.shape != (d.dim,):
        raise CcaError(f"initial state must have length {d.dim}", "invalid_state")
    norm = np.linalg.norm(initial)
    if abs(norm - 1) > 1e-9:
        raise CcaError(f"initial state must be normalized (norm {norm:.12g})", "invalid_state")
    sites = tuple(int(s) for s in sites)
    for s in sites:
        _basis(d.dim, s)
    v = d.eigenvectors
    coeff = v.T @ initial
    t = grid.points
    chosen = np.empty((len(t), len(sites)))
    total = np.empty(len(t))
    for s in range(0, len(t), _CHUNK):
        psi = (np.exp(-1j * np.outer(t[s:s + _CHUNK], d.eigenvalues)) * coeff) @ v.T
        p = np.abs(psi) ** 2
        chosen[s:s + _CHUNK] = p[:, list(sites)]
        total[s:s + _CHUNK] = p.sum(axis=1)
    bulk = total - chosen.sum(axis=1)
    return ProbabilitySeries(grid, sites, chosen, bulk, total)


def _parabola_vertex(y0: float, y1: float, y2: float) -> tuple[float, float]:
    """Vertex offset (in steps, relative to the middle point) and value."""
    curv = y0 - 2 * y1 + y2
    if curv >= 0:
        return 0.0, y1
    off = 0.5 * (y0 - y2) / curv
    off = float(np.clip(off, -1.0, 1.0))
    return off, y1 - 0.25 * (y0 - y2) * off


def peak_search(series, times=None) -> tuple[float, float]:
    """Global maximum of a sampled series, refined by a local parabola.

    The first grid point wins ties. Without ``times`` the position is
    reported in index units.
    """
    y = np.asarray(series, dtype=float)
    if y.size == 0:
        raise CcaError("empty series", "invalid_series")
    t = np.arange(len(y), dtype=float) if times is None else np.asarray(times, dtype=float)
    i = int(np.argmax(y))
    if 0 < i < len(y) - 1:
        off, val = _parabola_vertex(y[i - 1], y[i], y[i + 1])
        step = t[i + 1] - t[i] if off > 0 else t[i] - t[i - 1]
        return float(t[i] + off * step), float(val)
    return float(t[i]), float(y[i])


@dataclass(frozen=True)
class Peak:
    t: float
    value: float
    windowed: bool


def max_abs_amplitude(d: SpectralDecomposition, bra, ket, t_lo: float, t_hi: float,
                      centers=None, per_period: int = POINTS_PER_PERIOD,
                      budget: int = 400_000) -> Peak:
    """Maximum of |<bra|exp(-iHt)|ket>| over [t_lo, t_hi].

    The interval is sampled at ``per_period`` points per shortest period.
    When that would exceed ``budget`` points, only windows around ``centers``
    (default: the interval midpoint) are sampled, splitting the budget
    evenly; the exact spectral sum is still evaluated at every sample.
    """
    dt = shortest_period(d) / per_period
    if not np.isfinite(dt):
        val = float(abs(spectral_amplitude(d, bra, ket, [t_lo])[0]))
        return Peak(t_lo, val, False)
    wts = _weights(d, bra, ket)
    w = d.eigenvalues

    def amp(t):
        return np.abs(np.exp(-1j * np.outer(t, w)) @ wts)

    n_full = (t_hi - t_lo) / dt
    windowed = n_full > budget
    if windowed:
        centers = [(t_lo + t_hi) / 2] if centers is None else list(centers)
        half = 0.5 * budget * dt / len(centers)
        spans = [(max(t_lo, c - half), min(t_hi, c + half)) for c in centers]
    else:
        spans = [(t_lo, t_hi)]

    best_t, best_v = t_lo, -1.0
    for a, b in spans:
        n = int(np.ceil((b - a) / dt)) + 1
        for s in range(0, n, _CHUNK):
            t = a + dt * np.arange(s, min(n, s + _CHUNK))
            t = t[t <= b]
            if t.size == 0:
                continue
            f = amp(t)
            k = int(np.argmax(f))
            if f[k] > best_v:
                best_t, best_v = float(t[k]), float(f[k])
    y = amp(np.array([best_t - dt, best_t, best_t + dt]))
    off, _ = _parabola_vertex(*y)
    t_ref = float(np.clip(best_t + off * dt, t_lo, t_hi))
    # the refined point is kept only if the exact sum confirms it
    exact = float(amp(np.array([t_ref]))[0])
    if exact > best_v:
        best_t, best_v = t_ref, exact
    return Peak(best_t, best_v, windowed)
