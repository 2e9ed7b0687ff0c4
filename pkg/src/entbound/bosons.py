"""Fixed-number bosonic exact diagonalization for the Bose-Hubbard chain family.

    H = -J sum_<ij> (b_i^dag b_j + h.c.) + (U/2) sum_i n_i(n_i-1) - mu sum_i n_i

Particle number is conserved, so everything is organized in fixed-N Fock
sectors; a grand-canonical state is a direct sum of sector blocks with
sector weights. Sector bases are enumerated in lexicographically descending
occupation order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb, sqrt
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import InputError, NumericError, ResourceError, ValidationError
from .lattice import Lattice

MAX_SECTOR_DIM = 50_000
MAX_DENSE_DIM = 4_096
_EIGSH_SEED = 0xB05E


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation basis of the (M sites, N particles) sector."""

    num_sites: int
    num_particles: int
    occupations: np.ndarray                      # (dim, M) int64, descending lex
    index: dict = field(repr=False, default_factory=dict)

    @property
    def dim(self) -> int:
        return self.occupations.shape[0]

    def index_of(self, occ: Sequence[int]) -> int:
        return self.index[tuple(int(n) for n in occ)]


def sector_dimension(num_sites: int, num_particles: int) -> int:
    return comb(num_particles + num_sites - 1, num_particles)


def _compositions(parts: int, total: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total, -1, -1):
        for rest in _compositions(parts - 1, total - head):
            yield (head,) + rest


def enumerate_sector(num_sites: int, num_particles: int, *,
                     max_dim: int = MAX_SECTOR_DIM) -> FockBasis:
    """All occupation vectors with the given total, descending lexicographic."""
    if num_sites < 1:
        raise ValidationError(f"need at least one site, got {num_sites}")
    if num_particles < 0:
        raise ValidationError(f"particle number must be >= 0, got {num_particles}")
    dim = sector_dimension(num_sites, num_particles)
    if dim > max_dim:
        raise ResourceError(
            f"sector dimension {dim} exceeds cap {max_dim} (M={num_sites}, N={num_particles})")
    occ = np.array(list(_compositions(num_sites, num_particles)), dtype=np.int64)
    occ = occ.reshape(dim, num_sites)
    occ.setflags(write=False)
    index = {tuple(int(v) for v in row): k for k, row in enumerate(occ)}
    return FockBasis(num_sites=num_sites, num_particles=num_particles,
                     occupations=occ, index=index)


def hop_matrix(basis: FockBasis, i: int, j: int) -> sp.csr_matrix:
    """Matrix of b_i^dag b_j in the sector basis (i != j)."""
    occ = basis.occupations
    rows, cols, vals = [], [], []
    for k in range(basis.dim):
        nj = occ[k, j]
        if nj == 0:
            continue
        target = occ[k].copy()
        target[j] -= 1
        target[i] += 1
        rows.append(basis.index_of(target))
        cols.append(k)
        vals.append(sqrt((occ[k, i] + 1) * nj))
    return sp.csr_matrix((vals, (rows, cols)), shape=(basis.dim, basis.dim))


@dataclass(frozen=True, eq=False)
class BoseHubbardH:
    """Block-diagonal Hamiltonian over one or more fixed-N sectors."""

    blocks: dict            # N -> csr_matrix
    bases: dict             # N -> FockBasis
    J: float
    U: float
    mu: float
    lattice: Lattice

    @property
    def sectors(self) -> tuple[int, ...]:
        return tuple(sorted(self.blocks))

    def block(self, N: int) -> sp.csr_matrix:
        if N not in self.blocks:
            raise InputError(f"sector N={N} not present (have {self.sectors})")
        return self.blocks[N]


def _sector_list(sector: int | tuple[int, int] | Iterable[int]) -> list[int]:
    if isinstance(sector, (int, np.integer)):
        return [int(sector)]
    sector = tuple(sector)
    if len(sector) == 2 and all(isinstance(s, (int, np.integer)) for s in sector) \
            and sector[0] <= sector[1]:
        return list(range(int(sector[0]), int(sector[1]) + 1))
    return sorted({int(s) for s in sector})


def build_bose_hubbard(lattice: Lattice, J: float, U: float, mu: float,
                       sector: int | tuple[int, int] | Iterable[int], *,
                       max_dim: int = MAX_SECTOR_DIM) -> BoseHubbardH:
    """Assemble the sector block(s). ``sector`` is an N, an (lo, hi) range, or a list."""
    for val, name in ((J, "J"), (U, "U"), (mu, "mu")):
        if not np.isfinite(val):
            raise ValidationError(f"{name} must be finite, got {val}")
    blocks, bases = {}, {}
    for N in _sector_list(sector):
        if N < 0:
            raise ValidationError(f"negative particle number {N}")
        basis = enumerate_sector(lattice.num_sites, N, max_dim=max_dim)
        occ = basis.occupations.astype(float)
        diag = 0.5 * U * np.sum(occ * (occ - 1.0), axis=1) - mu * np.sum(occ, axis=1)
        H = sp.csr_matrix(sp.diags(diag, shape=(basis.dim, basis.dim)))
        for (i, j) in lattice.neighbor_pairs:
            A = hop_matrix(basis, i, j)
            H = H - J * (A + A.T)
        blocks[N] = H
        bases[N] = basis
    return BoseHubbardH(blocks=blocks, bases=bases, J=J, U=U, mu=mu, lattice=lattice)


@dataclass(eq=False)
class SectorBlock:
    """One fixed-N component of a bosonic state."""

    N: int
    basis: FockBasis
    weight: float
    vector: Optional[np.ndarray] = None
    rho: Optional[np.ndarray] = None

    @property
    def is_pure(self) -> bool:
        return self.vector is not None


@dataclass(eq=False)
class BosonState:
    """Number-superselected state: a weighted direct sum of sector blocks."""

    blocks: list
    beta: Optional[float] = None
    degenerate: bool = False
    energy: Optional[float] = None

    @property
    def num_sites(self) -> int:
        return self.blocks[0].basis.num_sites

    @property
    def mean_particle_number(self) -> float:
        return float(sum(blk.weight * blk.N for blk in self.blocks))

    def validate(self, atol: float = 1e-10) -> None:
        total = sum(blk.weight for blk in self.blocks)
        if abs(total - 1.0) > atol:
            raise ValidationError(f"sector weights sum to {total}")
        for blk in self.blocks:
            if blk.weight < -atol:
                raise ValidationError(f"negative sector weight {blk.weight}")
            if blk.is_pure:
                if abs(np.linalg.norm(blk.vector) - 1.0) > atol:
                    raise ValidationError(f"sector N={blk.N} vector not normalized")
            else:
                if abs(np.trace(blk.rho).real - 1.0) > atol:
                    raise ValidationError(f"sector N={blk.N} block trace != 1")
                if np.linalg.eigvalsh(blk.rho).min() < -atol:
                    raise ValidationError(f"sector N={blk.N} block not PSD")


def thermal_state_sector(H: BoseHubbardH, beta: float, *,
                         max_dense_dim: int = MAX_DENSE_DIM) -> BosonState:
    """Gibbs state over the Hamiltonian's sector blocks.

    With a single sector this is the canonical ensemble; with a sector range the
    blocks are weighted by their partition functions (mu already sits in H).
    """
    if not (np.isfinite(beta) and beta >= 0):
        raise ValidationError(f"beta must be finite and >= 0, got {beta}")
    eigs = {}
    for N, block in H.blocks.items():
        if block.shape[0] > max_dense_dim:
            raise ResourceError(
                f"sector N={N} dimension {block.shape[0]} exceeds dense cap {max_dense_dim}")
        eigs[N] = np.linalg.eigh(block.toarray())
    e_min = min(float(ev[0]) for ev, _ in eigs.values())
    blocks = []
    z_total = 0.0
    partials = {}
    for N, (evals, vecs) in eigs.items():
        w = np.exp(-beta * (evals - e_min))
        zN = float(w.sum())
        rho = (vecs * (w / zN)) @ vecs.T
        rho = 0.5 * (rho + rho.T)
        partials[N] = (rho, zN)
        z_total += zN
    for N in sorted(eigs):
        rho, zN = partials[N]
        blocks.append(SectorBlock(N=N, basis=H.bases[N], weight=zN / z_total, rho=rho))
    return BosonState(blocks=blocks, beta=beta)


def ground_state_sector(H: BoseHubbardH, N: int) -> BosonState:
    """Lowest eigenvector of the N-particle block, with a degeneracy flag."""
    block = H.block(N)
    dim = block.shape[0]
    scale = float(abs(block).sum(axis=1).max()) if block.nnz else 0.0
    if dim == 1:
        v = np.ones(1)
        e0 = float(block[0, 0])
        degenerate = True
    elif dim <= 512:
        evals, vecs = np.linalg.eigh(block.toarray())
        e0 = float(evals[0])
        v = vecs[:, 0]
        degenerate = (float(evals[1]) - e0) <= 1e-10 * scale
    else:
        rng = np.random.default_rng(_EIGSH_SEED)
        try:
            evals, vecs = spla.eigsh(block, k=2, which="SA",
                                     v0=rng.standard_normal(dim))
        except spla.ArpackNoConvergence as exc:
            raise NumericError(f"sector ground-state iteration failed: {exc}") from exc
        order = np.argsort(evals)
        e0 = float(evals[order[0]])
        v = vecs[:, order[0]]
        degenerate = (float(evals[order[1]]) - e0) <= 1e-10 * scale
    v = np.asarray(v, dtype=float)
    v /= np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    if v[k] < 0:
        v = -v
    residual = float(np.linalg.norm(block @ v - e0 * v))
    if residual > 1e-8 * max(scale, 1e-300):
        raise NumericError(f"sector ground-state residual {residual} too large")
    blk = SectorBlock(N=N, basis=H.bases[N], weight=1.0, vector=v)
    return BosonState(blocks=[blk], degenerate=degenerate, energy=e0)


@dataclass(eq=False)
class OneBodyDM:
    """G_ij = tr[rho b_i^dag b_j]; Hermitian, PSD, trace = mean particle number."""

    G: np.ndarray
    mean_number: float

    @property
    def num_sites(self) -> int:
        return self.G.shape[0]

    def validate(self, atol: float = 1e-10) -> None:
        if np.max(np.abs(self.G - self.G.conj().T)) > atol:
            raise ValidationError("one-body DM not Hermitian")
        evals = np.linalg.eigvalsh(self.G)
        if evals.min() < -atol:
            raise ValidationError(f"one-body DM not PSD (min eig {evals.min()})")
        if abs(np.trace(self.G).real - self.mean_number) > atol * max(1.0, self.mean_number):
            raise ValidationError("trace does not match mean particle number")


def _block_one_body(blk: SectorBlock) -> np.ndarray:
    M = blk.basis.num_sites
    occ = blk.basis.occupations
    G = np.zeros((M, M), dtype=complex)
    if blk.is_pure:
        psi = blk.vector
        weights = np.abs(psi) ** 2
    else:
        weights = np.real(np.diag(blk.rho))
    for i in range(M):
        G[i, i] = float(np.sum(weights * occ[:, i]))
    for i in range(M):
        for j in range(M):
            if i == j:
                continue
            A = hop_matrix(blk.basis, i, j).tocoo()
            if blk.is_pure:
                G[i, j] = np.sum(np.conj(blk.vector)[A.row] * A.data * blk.vector[A.col])
            else:
                G[i, j] = np.sum(blk.rho[A.col, A.row] * A.data)
    return G


def one_body_dm(state: BosonState) -> OneBodyDM:
    """Sector-weighted one-body density matrix of a BosonState."""
    M = state.num_sites
    G = np.zeros((M, M), dtype=complex)
    for blk in state.blocks:
        G += blk.weight * _block_one_body(blk)
    G = 0.5 * (G + G.conj().T)
    return OneBodyDM(G=G, mean_number=float(np.trace(G).real))
