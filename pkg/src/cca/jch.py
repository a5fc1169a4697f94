"""Arrays with one two-level atom per cavity (Jaynes-Cummings-Hubbard model).

The single-excitation sector is 2N dimensional. Basis order is fixed:
photonic states |1_x> occupy indices 0..N-1 and atomic states |e_x> occupy
N..2N-1. Rotating-wave coupling ``g`` and atomic frequency ``omega_a`` are
uniform; the cavity frequency is the zero of energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import AmplitudeSeries, TimeGrid, spectral_amplitude
from .errors import CcaError, NoBoundPairError, RegimeError
from .lattice import HoppingMatrix, ModularSpec, StaggeredSpec, UniformBulkSpec, build_field
from .spectral import BoundStatePair, SpectralDecomposition, diagonalize, innermost_pair

RESONANCE_TOL = 1e-6
WEAK_RATIO = 10.0
STRONG_RATIO = 10.0

SINGLE_MODE_RESONANCE = "single_mode_resonance"
STRONG_COUPLING = "strong_coupling"
INTERMEDIATE = "intermediate"


@dataclass(frozen=True)
class JchSpec:
    field: StaggeredSpec | ModularSpec | UniformBulkSpec | HoppingMatrix
    g: float
    omega_a: float

    def __post_init__(self):
        if not np.isfinite(self.g) or self.g < 0:
            raise CcaError(f"g must be finite and >= 0, got {self.g}", "out_of_range")
        if not np.isfinite(self.omega_a):
            raise CcaError(f"omega_a must be finite, got {self.omega_a}", "out_of_range")

    @property
    def omega_c(self) -> float:
        return 0.0


@dataclass(frozen=True)
class JchMatrix:
    hopping: HoppingMatrix
    g: float
    omega_a: float

    @property
    def n_sites(self) -> int:
        return self.hopping.dim

    @property
    def dim(self) -> int:
        return 2 * self.hopping.dim

    def to_dense(self) -> np.ndarray:
        n = self.n_sites
        h = np.zeros((2 * n, 2 * n))
        h[:n, :n] = self.hopping.to_dense()
        h[n:, n:] = self.omega_a * np.eye(n)
        h[:n, n:] = h[n:, :n] = self.g * np.eye(n)
        return h


def photon_state(n_sites: int, site: int) -> np.ndarray:
    v = np.zeros(2 * n_sites)
    v[site % n_sites] = 1.0
    return v


def atom_state(n_sites: int, site: int) -> np.ndarray:
    v = np.zeros(2 * n_sites)
    v[n_sites + site % n_sites] = 1.0
    return v


def polariton_state(n_sites: int, site: int, parity_sign: int = 1) -> np.ndarray:
    """(|e_x> + s|1_x>)/sqrt(2)."""
    if parity_sign not in (1, -1):
        raise CcaError("parity_sign must be +1 or -1", "invalid_parity")
    return (atom_state(n_sites, site) + parity_sign * photon_state(n_sites, site)) / np.sqrt(2)


def build_jch(spec: JchSpec) -> JchMatrix:
    return JchMatrix(build_field(spec.field), float(spec.g), float(spec.omega_a))


@dataclass(frozen=True)
class NormalModeJc:
    """One effective JC model: field mode n dressed by its excitonic twin."""

    index: int
    omega_n: float
    detuning: float
    rabi: float
    a_plus: float
    a_minus: float
    b_plus: float
    b_minus: float
    eps_plus: float
    eps_minus: float
    psi_plus: np.ndarray
    psi_minus: np.ndarray


def jc_coefficients(detuning: float, g: float):
    """Photonic/excitonic weights ((A+, B+), (A-, B-)) of the dressed pair.

    At g = 0 the 0/0 of the closed form is replaced by its g -> 0+ limit.
    The small root of Delta -+ Omega is computed without cancellation.
    """
    if g == 0:
        if detuning > 0:
            return (0.0, 1.0), (1.0, 0.0)
        if detuning < 0:
            return (1.0, 0.0), (0.0, -1.0)
        s = 1 / np.sqrt(2)
        return (s, s), (s, -s)
    rabi = np.hypot(detuning, 2 * g)
    if detuning >= 0:
        x_plus = detuning + rabi
        x_minus = -4 * g * g / x_plus
    else:
        x_minus = detuning - rabi
        x_plus = -4 * g * g / x_minus
    out = []
    for x in (x_plus, x_minus):
        r = np.hypot(x, 2 * g)
        out.append((2 * g / r, x / r))
    return out[0], out[1]


def normal_mode_decompose(field_decomp: SpectralDecomposition, g: float,
                          omega_a: float) -> list[NormalModeJc]:
    n = field_decomp.dim
    modes = []
    for j in range(n):
        w_n = float(field_decomp.eigenvalues[j])
        alpha = field_decomp.eigenvectors[:, j]
        photon = np.concatenate([alpha, np.zeros(n)])
        exciton = np.concatenate([np.zeros(n), alpha])
        delta = omega_a - w_n
        rabi = float(np.hypot(delta, 2 * g))
        (ap, bp), (am, bm) = jc_coefficients(delta, g)
        modes.append(NormalModeJc(
            index=j, omega_n=w_n, detuning=delta, rabi=rabi,
            a_plus=ap, a_minus=am, b_plus=bp, b_minus=bm,
            eps_plus=(omega_a + w_n + rabi) / 2, eps_minus=(omega_a + w_n - rabi) / 2,
            psi_plus=ap * photon + bp * exciton,
            psi_minus=am * photon + bm * exciton,
        ))
    return modes


def dressed_spectrum(modes: list[NormalModeJc]) -> np.ndarray:
    return np.sort([e for m in modes for e in (m.eps_minus, m.eps_plus)])


def spectral_width(field_decomp: SpectralDecomposition) -> float:
    return float(field_decomp.eigenvalues[-1] - field_decomp.eigenvalues[0])


def classify_regime(spec: JchSpec, pair: BoundStatePair | None,
                    field_decomp: SpectralDecomposition) -> str:
    """Tag the coupling regime.

    strong_coupling: g at least ten field spectral widths.
    single_mode_resonance: omega_a within 1e-6 J of a bound-pair energy and
    g at most a tenth of the pair splitting. Anything else is intermediate.
    """
    if spec.g >= STRONG_RATIO * spectral_width(field_decomp):
        return STRONG_COUPLING
    if pair is None:
        raise NoBoundPairError("regime needs the bound pair unless coupling is strong")
    detuning = min(abs(spec.omega_a - pair.omega_minus), abs(spec.omega_a - pair.omega_plus))
    if detuning <= RESONANCE_TOL and spec.g <= pair.gap / WEAK_RATIO:
        return SINGLE_MODE_RESONANCE
    return INTERMEDIATE


def classify_spec(spec: JchSpec) -> str:
    """Convenience wrapper: diagonalize the field and use its innermost pair."""
    d = diagonalize(build_field(spec.field))
    pair = innermost_pair(d) if d.dim >= 2 else None
    return classify_regime(spec, pair, d)


def solve(spec: JchSpec) -> tuple[JchMatrix, SpectralDecomposition]:
    """Full 2N diagonalization of the single-excitation JCH Hamiltonian."""
    h = build_jch(spec)
    return h, diagonalize(h.to_dense())


def atomic_transfer(spec: JchSpec, grid: TimeGrid,
                    decomposition: SpectralDecomposition | None = None) -> AmplitudeSeries:
    """f(t) = <e_N| exp(-iHt) |e_1>."""
    if decomposition is None:
        _, decomposition = solve(spec)
    n = decomposition.dim // 2
    values = spectral_amplitude(decomposition, atom_state(n, -1), atom_state(n, 0), grid.points)
    return AmplitudeSeries(grid, values, "e_1", "e_N")


def polariton_transfer(spec: JchSpec, parity_sign: int, grid: TimeGrid,
                       decomposition: SpectralDecomposition | None = None) -> AmplitudeSeries:
    """f(t) = 1/2 (<e_N| + s<1_N|) exp(-iHt) (|e_1> + s|1_1>)."""
    if decomposition is None:
        _, decomposition = solve(spec)
    n = decomposition.dim // 2
    ket = polariton_state(n, 0, parity_sign)
    bra = polariton_state(n, -1, parity_sign)
    values = spectral_amplitude(decomposition, bra, ket, grid.points)
    return AmplitudeSeries(grid, values, "pol_1", "pol_N")


@dataclass(frozen=True)
class EffectiveResonantModel:
    """Four-level reduction on {alpha_res, alpha_spec, beta_res, beta_spec}.

    Only the resonant bound mode couples to its excitonic twin; the other
    bound mode and its twin evolve freely.
    """

    branch: int
    g: float
    omega_a: float
    matrix: np.ndarray
    field_states: tuple  # (resonant, spectator) photonic mode profiles

    def atomic_amplitude(self, times) -> np.ndarray:
        """<e_N| exp(-iHt) |e_1> with |e_x> projected onto the two excitonic modes."""
        res, spec = self.field_states
        ket = np.array([0.0, 0.0, res[0], spec[0]])
        bra = np.array([0.0, 0.0, res[-1], spec[-1]])
        w, v = np.linalg.eigh(self.matrix)
        wts = (bra @ v) * (v.T @ ket)
        t = np.atleast_1d(np.asarray(times, dtype=float))
        return np.exp(-1j * np.outer(t, w)) @ wts


def effective_resonant_hamiltonian(field_decomp: SpectralDecomposition,
                                   pair: BoundStatePair, g: float,
                                   branch: int = 1) -> EffectiveResonantModel:
    """Reduced model with the atoms tuned to the even (``branch=+1``) or odd
    (``branch=-1``) bound mode."""
    if branch not in (1, -1):
        raise CcaError("branch must be +1 or -1", "invalid_branch")
    res, spec = ((pair.even_index, pair.odd_index) if branch == 1
                 else (pair.odd_index, pair.even_index))
    w_res = float(field_decomp.eigenvalues[res])
    w_spec = float(field_decomp.eigenvalues[spec])
    check = JchSpec(HoppingMatrix.from_couplings([0.0]), g, w_res)
    if classify_regime(check, pair, field_decomp) != SINGLE_MODE_RESONANCE:
        raise RegimeError(f"g = {g:.3g} is not small against the bound-pair gap "
                          f"{pair.gap:.3g}; single-mode resonance does not hold")
    h = np.diag([w_res, w_spec, w_res, w_res])
    h[0, 2] = h[2, 0] = g
    return EffectiveResonantModel(
        branch, float(g), w_res, h,
        (field_decomp.eigenvectors[:, res].copy(), field_decomp.eigenvectors[:, spec].copy()))
