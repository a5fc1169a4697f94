"""Single-excitation hopping Hamiltonians for coupled-cavity arrays.

All energies are in units of the hopping scale J and the cavity frequency is
taken as the zero of energy. A :class:`HoppingMatrix` stores a real symmetric
tridiagonal matrix as two vectors; the off-diagonal element between sites x
and x+1 is ``-coupling[x]`` (hopping enters the Hamiltonian with an overall
minus sign). Python indices are 0-based, so physical site ``x`` lives at
index ``x - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CcaError


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StaggeredSpec:
    """Peierls-distorted array with couplings J1 = (1+eta)J, J2 = (1-eta)J.

    Odd bonds (1-2, 3-4, ...) carry J1 and even bonds carry J2, so for
    eta < 0 the two end cavities hang weakly off the bulk.
    """

    n_sites: int
    eta: float
    j_scale: float = 1.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise CcaError(f"n_sites must be a positive even integer, got {self.n_sites}",
                           "invalid_size")
        if self.n_sites % 2:
            raise CcaError(f"n_sites must be even, got {self.n_sites}", "invalid_parity")
        if not np.isfinite(self.eta) or abs(self.eta) > 1:
            raise CcaError(f"eta must lie in [-1, 1], got {self.eta}", "out_of_range")
        if not self.j_scale > 0:
            raise CcaError(f"j_scale must be positive, got {self.j_scale}", "out_of_range")

    @classmethod
    def from_couplings(cls, n_sites: int, j1: float, j2: float) -> "StaggeredSpec":
        """Build from the two hopping rates directly (as in J1 = 0.3J, J2 = J)."""
        if j1 < 0 or j2 < 0 or j1 + j2 <= 0:
            raise CcaError(f"couplings must be non-negative and not both zero: {j1}, {j2}",
                           "out_of_range")
        return cls(n_sites, (j1 - j2) / (j1 + j2), (j1 + j2) / 2)

    @property
    def j1(self) -> float:
        return (1 + self.eta) * self.j_scale

    @property
    def j2(self) -> float:
        return (1 - self.eta) * self.j_scale

    @property
    def parity_analytic_valid(self) -> bool:
        # closed-form bound-state results need N/2 odd
        return (self.n_sites // 2) % 2 == 1


@dataclass(frozen=True)
class UniformBulkSpec:
    """Uniform bulk J2 with weaker outermost bonds J1."""

    n_sites: int
    j_outer: float
    j_bulk: float = 1.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 3:
            raise CcaError(f"uniform-bulk array needs n_sites >= 3, got {self.n_sites}",
                           "invalid_size")
        if self.j_outer < 0:
            raise CcaError(f"j_outer must be >= 0, got {self.j_outer}", "out_of_range")
        if not self.j_bulk > 0:
            raise CcaError(f"j_bulk must be > 0, got {self.j_bulk}", "out_of_range")


@dataclass(frozen=True)
class ModularSpec:
    """``n_modules`` identical staggered modules joined by ``j_mod`` bonds."""

    module: StaggeredSpec
    n_modules: int
    j_mod: float

    def __post_init__(self):
        if int(self.n_modules) != self.n_modules or self.n_modules < 1:
            raise CcaError(f"n_modules must be >= 1, got {self.n_modules}", "invalid_size")
        if not np.isfinite(self.j_mod) or self.j_mod < 0:
            raise CcaError(f"j_mod must be >= 0, got {self.j_mod}", "out_of_range")

    @property
    def n_sites(self) -> int:
        return self.module.n_sites * self.n_modules


@dataclass(frozen=True)
class HoppingMatrix:
    onsite: np.ndarray
    coupling: np.ndarray

    def __post_init__(self):
        onsite = _frozen(self.onsite)
        coupling = _frozen(self.coupling)
        if onsite.ndim != 1 or coupling.ndim != 1 or len(onsite) < 1:
            raise CcaError("onsite/coupling must be 1-d and non-empty", "invalid_matrix")
        if len(coupling) != len(onsite) - 1:
            raise CcaError(f"need {len(onsite) - 1} couplings, got {len(coupling)}",
                           "invalid_matrix")
        if np.any(coupling < 0):
            raise CcaError("couplings must be non-negative", "invalid_matrix")
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "coupling", coupling)

    @classmethod
    def from_couplings(cls, coupling, onsite=None) -> "HoppingMatrix":
        coupling = np.asarray(coupling, dtype=float)
        if onsite is None:
            onsite = np.zeros(len(coupling) + 1)
        return cls(onsite, coupling)

    @property
    def dim(self) -> int:
        return len(self.onsite)

    def to_dense(self) -> np.ndarray:
        h = np.diag(self.onsite.copy())
        idx = np.arange(self.dim - 1)
        h[idx, idx + 1] = -self.coupling
        h[idx + 1, idx] = -self.coupling
        return h

    def is_mirror_symmetric(self) -> bool:
        return bool(np.array_equal(self.coupling, self.coupling[::-1])
                    and np.array_equal(self.onsite, self.onsite[::-1]))

    def __eq__(self, other):
        if not isinstance(other, HoppingMatrix):
            return NotImplemented
        return (np.array_equal(self.onsite, other.onsite)
                and np.array_equal(self.coupling, other.coupling))

    __hash__ = None


@dataclass(frozen=True)
class ParityBlocks:
    """Mirror-parity blocks of a mirror-symmetric array of even length.

    ``defect_site`` is the 0-based block index of the last block site
    (physical block site N/2); ``defect_values`` holds the on-site shift of
    the even and odd block respectively.
    """

    even_block: HoppingMatrix
    odd_block: HoppingMatrix
    defect_site: int
    defect_values: tuple[float, float]
    full_dim: int = field(default=0)

    def to_site_basis(self, block_vector, parity: int) -> np.ndarray:
        """Map a block vector back to the full array via (|x> +- |N-x+1>)/sqrt(2)."""
        if parity not in (1, -1):
            raise CcaError("parity must be +1 or -1", "invalid_parity")
        v = np.asarray(block_vector)
        m = self.even_block.dim
        if v.shape != (m,):
            raise CcaError(f"block vector must have length {m}", "invalid_matrix")
        out = np.zeros(2 * m, dtype=v.dtype)
        out[:m] = v / np.sqrt(2)
        out[m:] = parity * v[::-1] / np.sqrt(2)
        return out


def build_staggered(spec: StaggeredSpec) -> HoppingMatrix:
    x = np.arange(1, spec.n_sites)
    coupling = (1 - (-1.0) ** x * spec.eta) * spec.j_scale
    return HoppingMatrix.from_couplings(coupling)


def build_uniform_bulk(spec: UniformBulkSpec) -> HoppingMatrix:
    coupling = np.full(spec.n_sites - 1, float(spec.j_bulk))
    coupling[0] = coupling[-1] = spec.j_outer
    return HoppingMatrix.from_couplings(coupling)


def build_modular(spec: ModularSpec) -> HoppingMatrix:
    intra = build_staggered(spec.module).coupling
    parts = []
    for j in range(spec.n_modules):
        parts.append(intra)
        if j < spec.n_modules - 1:
            parts.append([spec.j_mod])
    return HoppingMatrix.from_couplings(np.concatenate(parts))


def build_field(spec) -> HoppingMatrix:
    """Dispatch on the spec type."""
    if isinstance(spec, StaggeredSpec):
        return build_staggered(spec)
    if isinstance(spec, UniformBulkSpec):
        return build_uniform_bulk(spec)
    if isinstance(spec, ModularSpec):
        return build_modular(spec)
    if isinstance(spec, HoppingMatrix):
        return spec
    raise TypeError(f"unsupported field spec {type(spec).__name__}")


def parity_reduce(h: HoppingMatrix) -> ParityBlocks:
    if h.dim % 2:
        raise CcaError(f"parity reduction needs an even dimension, got {h.dim}",
                       "invalid_parity")
    if not h.is_mirror_symmetric():
        raise CcaError("matrix is not mirror symmetric", "not_mirror_symmetric")
    m = h.dim // 2
    j_edge = float(h.coupling[m - 1])
    coupling = h.coupling[: m - 1]
    blocks = []
    for sign in (-1.0, 1.0):
        onsite = h.onsite[:m].copy()
        onsite[m - 1] += sign * j_edge
        blocks.append(HoppingMatrix(onsite, coupling))
    return ParityBlocks(blocks[0], blocks[1], m - 1, (-j_edge, j_edge), h.dim)
