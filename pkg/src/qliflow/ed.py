"""Exact dense-diagonalization engine for chains up to DEFAULT_ED_CAP sites.

Serves as the ground-truth oracle for the MPS engine: statevector evolution,
single-site reduced density matrices and entropies, infinite-temperature
OTOCs, and dense ground states.

Basis convention: site 0 is the most significant qubit, spin-up is index 0.
Basis index a encodes site s in bit (L-1-s), so |↑↓⟩ at L=2 is index 1.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .model import OperatorSum

DEFAULT_ED_CAP = 12

NORM_TOL = 1e-10


class CapacityError(ValueError):
    """Dense computation requested above the ED site cap."""


def _check_cap(L: int, cap: int = DEFAULT_ED_CAP):
    if L > cap:
        raise CapacityError(
            f"L={L} exceeds the exact-diagonalization cap of {cap} sites; "
            "use the MPS engine for larger chains"
        )


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of an L-site chain, amplitudes of length 2^L."""

    L: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape != (2**self.L,):
            raise ValueError(f"amplitude length {amps.shape} does not match L={self.L}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")


def product_state(bits) -> StateVector:
    """Computational basis state from per-site bits (0 = up, 1 = down)."""
    bits = list(bits)
    L = len(bits)
    index = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError(f"bits must be 0 or 1, got {b!r}")
        index = (index << 1) | b
    amps = np.zeros(2**L, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(L, amps)


def neel_state(L: int) -> StateVector:
    """Alternating product state up-down-up-down... with up on site 0."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    return product_state([i % 2 for i in range(L)])


def dense_matrix(op: OperatorSum) -> np.ndarray:
    """Full 2^L x 2^L matrix of a term list.

    Returns float64 when every block is real (true for the Ising model),
    complex128 otherwise; the real path roughly halves eigh time and memory.
    """
    all_real = all(np.max(np.abs(term.block.imag)) == 0.0 for term in op.terms)
    dtype = np.float64 if all_real else np.complex128
    dim = 2**op.L
    H = scipy.sparse.csr_matrix((dim, dim), dtype=dtype)
    for term in op.terms:
        block = term.block.real if all_real else term.block
        left = scipy.sparse.identity(2 ** term.sites[0], dtype=dtype, format="csr")
        right_sites = op.L - term.sites[-1] - 1
        right = scipy.sparse.identity(2**right_sites, dtype=dtype, format="csr")
        H = H + scipy.sparse.kron(
            scipy.sparse.kron(left, scipy.sparse.csr_matrix(block)), right, format="csr"
        )
    return H.toarray()


def _op_key(op: OperatorSum):
    return (op.L,) + tuple((t.sites, t.block.tobytes()) for t in op.terms)


_EIGH_CACHE: OrderedDict = OrderedDict()
_EIGH_CACHE_SIZE = 2


def _eigendecomposition(op: OperatorSum):
    """Eigenvalues and eigenvectors of the dense matrix, cached by content.

    The cache holds two entries so a full/frozen Hamiltonian pair evolving
    several initial states pays for each diagonalization once.
    """
    key = _op_key(op)
    if key in _EIGH_CACHE:
        _EIGH_CACHE.move_to_end(key)
        return _EIGH_CACHE[key]
    w, V = scipy.linalg.eigh(dense_matrix(op))
    _EIGH_CACHE[key] = (w, V)
    if len(_EIGH_CACHE) > _EIGH_CACHE_SIZE:
        _EIGH_CACHE.popitem(last=False)
    return w, V


def evolve(op: OperatorSum, psi0: StateVector, times, cap: int = DEFAULT_ED_CAP):
    """States exp(-iHt)|psi0> on an ascending time grid.

    One full Hermitian eigendecomposition of H is reused across all times,
    so every output is exact to machine precision (no step-size error).
    """
    if op.L != psi0.L:
        raise ValueError(f"operator L={op.L} does not match state L={psi0.L}")
    _check_cap(op.L, cap)
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-D grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be ascending and start at t >= 0")
    w, V = _eigendecomposition(op)
    coeff = V.conj().T @ psi0.amplitudes
    out = []
    for t in times:
        amps = V @ (np.exp(-1j * w * t) * coeff)
        out.append(StateVector(op.L, amps))
    return out


def reduce_single_site(psi: StateVector, site: int) -> np.ndarray:
    """2x2 reduced density matrix of one site (partial trace over the rest)."""
    if not 0 <= site < psi.L:
        raise ValueError(f"site {site} out of range for L={psi.L}")
    a = psi.amplitudes.reshape(2**site, 2, -1)
    return np.einsum("abc,adc->bd", a, a.conj())


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S = -sum lambda ln lambda in nats, with 0 ln 0 := 0.

    Eigenvalues below -1e-9 are rejected as invalid; small negatives from
    roundoff are clamped to zero.
    """
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -1e-9:
        raise ValueError(f"density matrix has eigenvalue {evals.min():.3e} < -1e-9")
    evals = np.clip(evals, 0.0, None)
    p = evals[evals > 0.0]
    return float(-(p * np.log(p)).sum())


def _z_diagonal(L: int, site: int) -> np.ndarray:
    """Diagonal of the Pauli Z on one site, over all 2^L basis states."""
    indices = np.arange(2**L)
    bits = (indices >> (L - 1 - site)) & 1
    return (1 - 2 * bits).astype(np.float64)


def otoc_series(op: OperatorSum, w_site: int, v_site: int, times, cap: int = DEFAULT_ED_CAP):
    """Infinite-temperature OTOC C(t) = Tr([W(t),V]dag [W(t),V]) / 2^L.

    W = Z_{w_site}, V = Z_{v_site}, W(t) = e^{iHt} W e^{-iHt}. For traceless
    Pauli W, V this reduces to C(t) = 2 - 2 Re Tr(W(t) V W(t) V) / 2^L. The
    four-operator trace is evaluated in the energy eigenbasis, where W(t) is
    the fixed matrix W-tilde rescaled by phases, so each time point costs one
    matrix product instead of a fresh conjugation.
    """
    _check_cap(op.L, cap)
    if w_site == v_site:
        raise ValueError("w_site and v_site must differ")
    for s in (w_site, v_site):
        if not 0 <= s < op.L:
            raise ValueError(f"site {s} out of range for L={op.L}")
    times = np.asarray(times, dtype=np.float64)
    w, V = _eigendecomposition(op)
    zw = _z_diagonal(op.L, w_site)
    zv = _z_diagonal(op.L, v_site)
    real_basis = not np.iscomplexobj(V)
    W_t = (V.conj() * zw[:, None]).T @ V
    V_t = (V.conj() * zv[:, None]).T @ V
    dim = 2**op.L
    out = np.empty(times.size, dtype=np.float64)
    if not real_basis:
        V_tc = V_t.astype(np.complex128)
    for k, t in enumerate(times):
        phase = np.exp(1j * w * t)
        if real_basis:
            # real/imag split with freshly allocated contiguous operands:
            # a strided .real view would push matmul off the BLAS fast path
            P = np.outer(phase, phase.conj())
            N_re = (W_t * P.real) @ V_t
            N_im = (W_t * P.imag) @ V_t
            trace_re = np.sum(N_re * N_re.T) - np.sum(N_im * N_im.T)
            trace_im = np.sum(N_re * N_im.T) + np.sum(N_im * N_re.T)
        else:
            M = (W_t * phase[:, None]) * phase.conj()[None, :]
            N = M @ V_tc
            prod = np.sum(N * N.T)
            trace_re, trace_im = prod.real, prod.imag
        c = 2.0 - 2.0 * trace_re / dim
        c_imag = -2.0 * trace_im / dim
        if abs(c_imag) > 1e-8:
            raise ValueError(f"OTOC imaginary part {c_imag:.3e} exceeds tolerance at t={t}")
        out[k] = c
    return out


def ground_state_dense(op: OperatorSum, cap: int = DEFAULT_ED_CAP):
    """Lowest eigenpair of the dense matrix: (energy, StateVector).

    For a degenerate ground space any normalized vector in the span may be
    returned.
    """
    _check_cap(op.L, cap)
    H = dense_matrix(op)
    w, V = scipy.linalg.eigh(H, subset_by_index=(0, 0))
    vec = V[:, 0]
    return float(w[0]), StateVector(op.L, vec / np.linalg.norm(vec))
