"""Mixed-field Ising chain on open boundaries: Hamiltonian term lists,
frozen-site variants, and the analytic velocity/timescale table.

The model is

    H = -J sum_i Z_i Z_{i+1} - B sum_i X_i - h_z sum_i Z_i

with J setting the energy scale. h_z = 0 is the integrable (free-fermion)
point; any nonzero h_z breaks integrability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class HamiltonianSpec:
    """Parameters of the open-boundary mixed-field Ising chain.

    Attributes
    ----------
    L : number of sites (>= 2)
    J : ZZ coupling (energy scale)
    B : transverse (X) field
    h_z : longitudinal (Z) field; zero means integrable
    """

    L: int
    J: float = 1.0
    B: float = 0.0
    h_z: float = 0.0

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 2:
            raise ValueError(f"L must be an integer >= 2, got {self.L!r}")
        for name in ("J", "B", "h_z"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")

    def is_integrable(self) -> bool:
        return self.h_z == 0.0

    def integrable_twin(self) -> "HamiltonianSpec":
        """Same chain with the longitudinal field switched off."""
        return HamiltonianSpec(L=self.L, J=self.J, B=self.B, h_z=0.0)


@dataclass(frozen=True, eq=False)
class Term:
    """One local Hamiltonian term: a Hermitian block on 1 or 2 adjacent sites.

    `sites` is (i,) with a 2x2 block, or (i, i+1) with a 4x4 block whose
    index convention is site-major: row/col index = 2*p_i + p_{i+1}.
    """

    sites: tuple[int, ...]
    block: np.ndarray

    def __post_init__(self):
        block = np.asarray(self.block, dtype=np.complex128)
        block.setflags(write=False)
        object.__setattr__(self, "block", block)
        dim = 2 ** len(self.sites)
        if len(self.sites) not in (1, 2):
            raise ValueError(f"term support must be 1 or 2 sites, got {self.sites}")
        if block.shape != (dim, dim):
            raise ValueError(f"block shape {block.shape} does not match support {self.sites}")
        if np.max(np.abs(block - block.conj().T)) > HERMITICITY_TOL:
            raise ValueError(f"term block on sites {self.sites} is not Hermitian")


@dataclass(frozen=True, eq=False)
class OperatorSum:
    """Ordered list of local terms on an L-site chain.

    Two-site supports must be adjacent pairs (i, i+1); all site indices lie
    in [0, L). Immutable after construction.
    """

    L: int
    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for term in self.terms:
            if any(s < 0 or s >= self.L for s in term.sites):
                raise ValueError(f"term sites {term.sites} out of range for L={self.L}")
            if len(term.sites) == 2 and term.sites[1] != term.sites[0] + 1:
                raise ValueError(f"two-site support must be adjacent, got {term.sites}")

    def terms_on_site(self, site: int) -> tuple[Term, ...]:
        return tuple(t for t in self.terms if site in t.sites)

    def without_site(self, site: int) -> "OperatorSum":
        """Drop every term whose support includes `site`."""
        return OperatorSum(self.L, tuple(t for t in self.terms if site not in t.sites))


def build_hamiltonian(spec: HamiltonianSpec) -> OperatorSum:
    """Term list of the mixed-field Ising Hamiltonian for `spec`.

    Bond terms -J Z_i Z_{i+1} for i in [0, L-2], site terms -B X_i and
    -h_z Z_i for every site. Terms with zero coefficient are omitted so
    term counts are deterministic.
    """
    terms: list[Term] = []
    if spec.J != 0.0:
        zz = np.kron(PAULI_Z, PAULI_Z)
        for i in range(spec.L - 1):
            terms.append(Term((i, i + 1), -spec.J * zz))
    if spec.B != 0.0:
        for i in range(spec.L):
            terms.append(Term((i,), -spec.B * PAULI_X))
    if spec.h_z != 0.0:
        for i in range(spec.L):
            terms.append(Term((i,), -spec.h_z * PAULI_Z))
    return OperatorSum(spec.L, tuple(terms))


def build_frozen_hamiltonian(spec: HamiltonianSpec, frozen_site: int) -> OperatorSum:
    """Hamiltonian with every term acting nontrivially on `frozen_site` removed.

    Both bond terms touching the site and its own field terms are dropped, so
    the generated dynamics acts as the identity on the frozen site.
    """
    if not 0 <= frozen_site < spec.L:
        raise ValueError(f"frozen_site {frozen_site} out of range for L={spec.L}")
    return build_hamiltonian(spec).without_site(frozen_site)


def dispersion(J: float, B: float, k):
    """Free-fermion quasiparticle energy eps_k = 2 sqrt(J^2 + B^2 - 2 J B cos k).

    Valid for the integrable (h_z = 0) chain; k in [-pi, pi]. Accepts scalar
    or array k.
    """
    return 2.0 * np.sqrt(J * J + B * B - 2.0 * J * B * np.cos(k))


@dataclass(frozen=True)
class VelocityTable:
    """Characteristic velocities and timescales of a chain spec.

    v_lr = 2 e J is the rigorous Lieb-Robinson bound; v_max = 2 min(J, B) is
    the maximum group velocity of the free-fermion dispersion and sets the
    observed wavefront. t_scr = L / v_max is the scrambling time.
    """

    v_lr: float
    v_max: float
    t_scr: float

    def t_lr(self, d: float) -> float:
        return d / self.v_lr

    def t_max(self, d: float) -> float:
        if self.v_max == 0.0:
            return math.inf
        return d / self.v_max


def velocity_table(spec: HamiltonianSpec) -> VelocityTable:
    v_lr = 2.0 * math.e * abs(spec.J)
    v_max = 2.0 * min(abs(spec.J), abs(spec.B))
    t_scr = math.inf if v_max == 0.0 else spec.L / v_max
    return VelocityTable(v_lr=v_lr, v_max=v_max, t_scr=t_scr)
