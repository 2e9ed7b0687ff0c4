"""Spin-1/2 exact diagonalization on desk-scale lattices.

The Hamiltonian is the nearest-neighbor Heisenberg model written with Pauli
operators (not spin-1/2 S matrices):

    H = J * sum_pairs (sx_i sx_j + sy_i sy_j + sz_i sz_j)

assembled as a real symmetric sparse matrix in the computational z-basis:
site k maps to bit k (LSB = site 0), and bit value 0 means sz = +1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericError, ResourceError, ValidationError
from .lattice import Lattice

_ALPHAS = ("x", "y", "z")
_EIGSH_SEED = 0x5EED  # fixed ARPACK start vector -> deterministic output bytes

MAX_SPARSE_SITES = 20
MAX_DENSE_SITES = 12


@dataclass(frozen=True, eq=False)
class SpinHamiltonian:
    matrix: sp.csr_matrix
    J: float
    lattice: Lattice

    @property
    def num_sites(self) -> int:
        return self.lattice.num_sites

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def norm_bound(self) -> float:
        """Upper bound on the spectral norm (max absolute row sum)."""
        return float(abs(self.matrix).sum(axis=1).max()) if self.matrix.nnz else 0.0


@dataclass(eq=False)
class SpinState:
    """Pure vector or density matrix on M qubits."""

    num_sites: int
    vector: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None
    beta: Optional[float] = None
    degenerate: bool = False
    energy: Optional[float] = None

    def __post_init__(self):
        if (self.vector is None) == (self.rho is None):
            raise ValidationError("state needs exactly one of vector / rho")
        dim = 1 << self.num_sites
        arr = self.vector if self.vector is not None else self.rho
        if arr.shape[0] != dim:
            raise ValidationError(f"state dimension {arr.shape[0]} != 2^{self.num_sites}")

    @property
    def is_pure(self) -> bool:
        return self.vector is not None

    @property
    def dim(self) -> int:
        return 1 << self.num_sites

    def density(self) -> np.ndarray:
        if self.rho is not None:
            return self.rho
        v = self.vector
        return np.outer(v, v.conj())

    def validate(self, atol: float = 1e-10) -> None:
        """Check trace/norm and positivity; raises ValidationError on failure."""
        if self.is_pure:
            nrm = float(np.linalg.norm(self.vector))
            if abs(nrm - 1.0) > atol:
                raise ValidationError(f"pure state norm {nrm} != 1")
            return
        tr = complex(np.trace(self.rho))
        if abs(tr - 1.0) > atol:
            raise ValidationError(f"trace {tr} != 1")
        if np.max(np.abs(self.rho - self.rho.conj().T)) > atol:
            raise ValidationError("density matrix not Hermitian")
        evals = np.linalg.eigvalsh(self.rho)
        if evals.min() < -atol:
            raise ValidationError(f"density matrix not PSD (min eig {evals.min()})")


@dataclass(eq=False)
class CorrelatorSet:
    """Equal-time Pauli correlations C[alpha][i][j] and on-site averages b[alpha][i]."""

    C: np.ndarray   # (3, M, M) real, symmetric in (i, j), alpha order x,y,z
    b: np.ndarray   # (3, M) real

    @property
    def num_sites(self) -> int:
        return self.C.shape[1]

    def validate(self, atol: float = 1e-10) -> None:
        M = self.num_sites
        if np.max(np.abs(self.C - np.swapaxes(self.C, 1, 2))) > atol:
            raise ValidationError("correlator matrix not symmetric")
        diag = self.C[:, np.arange(M), np.arange(M)]
        if np.max(np.abs(diag - 1.0)) > 0:
            raise ValidationError("C[alpha][i][i] must be exactly 1")
        if np.max(np.abs(self.C)) > 1 + atol:
            raise ValidationError("|C| exceeds 1")
        norms = np.linalg.norm(self.b, axis=0)
        if norms.max() > 1 + atol:
            raise ValidationError("Bloch vector norm exceeds 1")


def build_heisenberg(lattice: Lattice, J: float, *, max_sites: int = MAX_SPARSE_SITES) -> SpinHamiltonian:
    """Assemble H = J * sum_<ij> sigma_i . sigma_j as a real sparse matrix."""
    M = lattice.num_sites
    if M > max_sites:
        raise ResourceError(f"{M} sites exceeds the sparse-assembly cap {max_sites}")
    if not np.isfinite(J):
        raise ValidationError(f"coupling J must be finite, got {J}")
    dim = 1 << M
    states = np.arange(dim, dtype=np.int64)
    diag = np.zeros(dim)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    for (i, j) in lattice.neighbor_pairs:
        zi = 1.0 - 2.0 * ((states >> i) & 1)
        zj = 1.0 - 2.0 * ((states >> j) & 1)
        diag += J * zi * zj
        differ = states[((states >> i) ^ (states >> j)) & 1 == 1]
        rows.append(differ ^ ((1 << i) | (1 << j)))
        cols.append(differ)
    H = sp.csr_matrix(sp.diags(diag))
    if rows:
        r = np.concatenate(rows)
        c = np.concatenate(cols)
        # sx sx + sy sy flips an anti-aligned pair with amplitude 2
        H = H + sp.csr_matrix((np.full(r.size, 2.0 * J), (r, c)), shape=(dim, dim))
    return SpinHamiltonian(matrix=H, J=J, lattice=lattice)


def thermal_state(H: SpinHamiltonian, beta: float, *, max_sites: int = MAX_DENSE_SITES) -> SpinState:
    """Gibbs state exp(-beta H)/Z via dense eigendecomposition."""
    if H.num_sites > max_sites:
        raise ResourceError(
            f"{H.num_sites} sites exceeds the dense-thermal cap {max_sites}; "
            f"use ground_state for larger systems")
    if not (np.isfinite(beta) and beta >= 0):
        raise ValidationError(f"beta must be finite and >= 0, got {beta}")
    evals, vecs = np.linalg.eigh(H.matrix.toarray())
    w = np.exp(-beta * (evals - evals[0]))
    w /= w.sum()
    rho = (vecs * w) @ vecs.T
    rho = 0.5 * (rho + rho.T)
    return SpinState(num_sites=H.num_sites, rho=rho, beta=beta)


def ground_state(H: SpinHamiltonian, *, max_sites: int = MAX_SPARSE_SITES) -> SpinState:
    """Lowest eigenvector; flags (near-)degenerate ground spaces.

    Small problems go through dense eigh; larger ones through ARPACK with a
    fixed-seed start vector (a deterministic generic vector — structured start
    vectors can be exactly orthogonal to the ground state and converge to the
    wrong level).
    """
    M = H.num_sites
    if M > max_sites:
        raise ResourceError(f"{M} sites exceeds the iterative-solver cap {max_sites}")
    dim = H.dim
    scale = H.norm_bound()
    if dim <= 512:
        evals, vecs = np.linalg.eigh(H.matrix.toarray())
        e0, e1 = float(evals[0]), float(evals[1])
        v = vecs[:, 0]
    else:
        rng = np.random.default_rng(_EIGSH_SEED)
        v0 = rng.standard_normal(dim)
        try:
            evals, vecs = spla.eigsh(H.matrix, k=2, which="SA", v0=v0)
        except spla.ArpackNoConvergence as exc:
            raise NumericError(f"ground-state iteration failed to converge: {exc}") from exc
        order = np.argsort(evals)
        e0, e1 = float(evals[order[0]]), float(evals[order[1]])
        v = vecs[:, order[0]]
    v = np.asarray(v, dtype=float)
    v /= np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    residual = float(np.linalg.norm(H.matrix @ v - e0 * v))
    if residual > 1e-8 * max(scale, 1e-300):
        raise NumericError(f"ground-state residual {residual} exceeds 1e-8 * |H|")
    degenerate = (e1 - e0) <= 1e-10 * scale
    return SpinState(num_sites=M, vector=v, degenerate=degenerate, energy=e0)


def _pauli_expectation(state: SpinState, sites: tuple[int, ...], axes: tuple[str, ...],
                       states_idx: np.ndarray) -> complex:
    """<P> for a product of single-site Paulis via its signed-permutation action."""
    mask = 0
    for s, a in zip(sites, axes):
        if a in ("x", "y"):
            mask ^= 1 << s
    perm = states_idx ^ mask
    phase = np.ones(states_idx.size, dtype=complex)
    for s, a in zip(sites, axes):
        bit = (states_idx >> s) & 1
        if a == "y":
            phase *= np.where(bit == 0, 1j, -1j)
        elif a == "z":
            phase *= 1.0 - 2.0 * bit
    if state.is_pure:
        psi = state.vector
        return complex(np.sum(np.conj(psi)[perm] * phase * psi))
    return complex(np.sum(state.rho[states_idx, perm] * phase))


def correlators(state: SpinState) -> CorrelatorSet:
    """All two-site Pauli correlations and on-site Bloch components.

    The i == j diagonal is the identity expectation and is set to 1 exactly.
    """
    M = state.num_sites
    idx = np.arange(state.dim, dtype=np.int64)
    C = np.zeros((3, M, M))
    b = np.zeros((3, M))
    for ai, alpha in enumerate(_ALPHAS):
        for i in range(M):
            val = _pauli_expectation(state, (i,), (alpha,), idx)
            _check_real(val, f"<{alpha}_{i}>")
            b[ai, i] = val.real
            C[ai, i, i] = 1.0
            for j in range(i + 1, M):
                val = _pauli_expectation(state, (i, j), (alpha, alpha), idx)
                _check_real(val, f"<{alpha}_{i} {alpha}_{j}>")
                C[ai, i, j] = C[ai, j, i] = val.real
    return CorrelatorSet(C=C, b=b)


def _check_real(val: complex, label: str, tol: float = 1e-9) -> None:
    if abs(val.imag) > tol:
        raise NumericError(f"{label} has imaginary residue {val.imag}")


@dataclass(eq=False)
class StructureFactorGrid:
    """S(q) sampled on a QGrid, with the per-axis components retained."""

    qs: np.ndarray          # (n, d)
    S: np.ndarray           # (n,)
    S_alpha: np.ndarray     # (3, n)
    coord_names: tuple[str, ...]

    def __len__(self) -> int:
        return self.S.shape[0]


_Q_NAMES = ("qx", "qy", "qz")


def structure_factor_components(corr: CorrelatorSet, lattice: Lattice,
                                q: np.ndarray) -> np.ndarray:
    """Per-Pauli-axis structure factor S_alpha(q) = (1/M) sum_ij e^{iq.(ri-rj)} C_alpha_ij."""
    M = corr.num_sites
    p = np.exp(1j * (lattice.positions @ np.atleast_1d(np.asarray(q, dtype=float))))
    out = np.empty(3)
    for ai in range(3):
        val = np.einsum("i,ij,j->", p, corr.C[ai], p.conj()) / M
        if abs(val.imag) > 1e-10:
            raise NumericError(
                f"S_{_ALPHAS[ai]}(q) imaginary residue {val.imag} (asymmetric correlators?)")
        out[ai] = val.real
    return out


def structure_factor(corr: CorrelatorSet, lattice: Lattice, q: np.ndarray) -> float:
    """Total static structure factor S(q) = sum_alpha S_alpha(q)."""
    return float(structure_factor_components(corr, lattice, q).sum())


def structure_factor_grid(corr: CorrelatorSet, lattice: Lattice, grid) -> StructureFactorGrid:
    """Vectorized S(q) over a QGrid."""
    M = corr.num_sites
    qs = grid.qs
    P = np.exp(1j * (qs @ lattice.positions.T))             # (n, M)
    S_alpha = np.empty((3, qs.shape[0]))
    for ai in range(3):
        vals = np.einsum("ni,ij,nj->n", P, corr.C[ai], P.conj()) / M
        resid = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
        if resid > 1e-10:
            raise NumericError(f"S_{_ALPHAS[ai]} grid imaginary residue {resid}")
        S_alpha[ai] = vals.real
    return StructureFactorGrid(qs=np.asarray(qs, dtype=float), S=S_alpha.sum(axis=0),
                               S_alpha=S_alpha, coord_names=_Q_NAMES[: lattice.ndim])


def energy_expectation(H: SpinHamiltonian, state: SpinState) -> float:
    """tr[rho H] straight from the matrix representation."""
    if state.is_pure:
        return float(np.real(state.vector.conj() @ (H.matrix @ state.vector)))
    return float(np.real(np.trace(H.matrix @ state.rho)))


def energy_from_correlators(H: SpinHamiltonian, corr: CorrelatorSet) -> float:
    """tr[rho H] reconstructed as J * sum_pairs sum_alpha C[alpha][i][j]."""
    total = 0.0
    for (i, j) in H.lattice.neighbor_pairs:
        total += float(corr.C[:, i, j].sum())
    return H.J * total
