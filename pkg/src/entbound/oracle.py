"""Brute-force oracles that validate the bound machinery from first principles.

Every suite samples states whose separability is true by construction and
checks that the witnesses/bounds never fire on them, within proven-inequality
tolerances (1e-9 absolute unless noted). Sampling uses per-sample RNG streams
keyed by (suite seed, sample index), so results are independent of evaluation
order and safe to parallelize.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import pi
from typing import Optional, Sequence

import numpy as np

from . import bosons, spin
from .bounds import product_witness_expectation, spin_bound_raw
from .errors import InputError, InternalConsistencyError, ResourceError, ValidationError
from .lattice import Lattice, LatticeSpec, build_lattice
from .tof import TofCalibration, kernel_ratio_matrix
from .util import parallel_map

MAX_ORACLE_SITES = 10

_PAULIS = np.array([[[0, 1], [1, 0]],
                    [[0, -1j], [1j, 0]],
                    [[1, 0], [0, -1]]], dtype=complex)
_I2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class OracleReport:
    """Outcome of one validation suite; serializes to the fixed six-field JSON."""

    suite: str
    seed: int
    samples: int
    margin: float
    tolerance: float
    passed: bool
    extra: dict = field(default_factory=dict, repr=False, compare=False)

    def to_json_dict(self) -> dict:
        return {"suite": self.suite, "seed": int(self.seed), "samples": int(self.samples),
                "margin": float(self.margin), "tolerance": float(self.tolerance),
                "pass": bool(self.passed)}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict()) + "\n"


def _rng(seed: int, *counters: int) -> np.random.Generator:
    return np.random.default_rng((int(seed),) + tuple(int(c) for c in counters))


def sample_bloch_vector(rng: np.random.Generator, purity: str) -> np.ndarray:
    """Haar-uniform on the sphere surface (pure) or uniform in the ball (mixed)."""
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    if purity == "pure":
        return u
    return u * rng.random() ** (1.0 / 3.0)


def _qubit_rho(bloch: np.ndarray) -> np.ndarray:
    return 0.5 * (_I2 + np.einsum("a,aij->ij", bloch, _PAULIS))


def _haar_qubit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return v / np.linalg.norm(v)


def sample_product_spin_state(num_sites: int, purity: str, seed) -> tuple[spin.SpinState, np.ndarray]:
    """A random fully-product M-qubit state plus its per-site Bloch vectors.

    ``purity`` is "pure" (Haar-uniform site vectors) or "mixed" (site density
    matrices uniform over the Bloch ball). Capped at 10 sites: the global
    state is materialized.
    """
    if purity not in ("pure", "mixed"):
        raise ValidationError(f"purity must be 'pure' or 'mixed', got {purity!r}")
    if num_sites > MAX_ORACLE_SITES:
        raise ResourceError(f"{num_sites} sites exceeds the oracle cap {MAX_ORACLE_SITES}")
    rng = np.random.default_rng(seed)
    bloch = np.empty((3, num_sites))
    if purity == "pure":
        psi = np.ones(1, dtype=complex)
        for i in range(num_sites):
            v = _haar_qubit(rng)
            rho = np.outer(v, v.conj())
            bloch[:, i] = np.real(np.einsum("aij,ji->a", _PAULIS, rho))
            # site i lives on bit i: earlier sites vary fastest in the index
            psi = np.kron(v, psi)
        state = spin.SpinState(num_sites=num_sites, vector=psi)
    else:
        rho_full = np.ones((1, 1), dtype=complex)
        for i in range(num_sites):
            b = sample_bloch_vector(rng, "mixed")
            bloch[:, i] = b
            rho_full = np.kron(_qubit_rho(b), rho_full)
        state = spin.SpinState(num_sites=num_sites, rho=rho_full)
    return state, bloch


def _chain(num_sites: int, spacing: float = 1.0) -> Lattice:
    return build_lattice(LatticeSpec(kind="chain", dims=(num_sites,), spacing=spacing))


def check_spin_witness(num_sites: int = 6, samples: int = 1000, seed: int = 0, *,
                       q_list: Optional[np.ndarray] = None,
                       lattice: Optional[Lattice] = None,
                       tolerance: float = 1e-9) -> OracleReport:
    """Witness soundness on random product states, with a dual-path cross-check.

    For each sample, <S(q)/2 - 1> is evaluated both directly (global state ->
    correlators -> structure factor) and through the Bloch decomposition; the
    two must agree to 1e-9 (anything worse raises InternalConsistencyError,
    a build bug rather than a witness violation), and the witness expectation
    must never drop below -1e-9 on these separable-by-construction states.
    """
    lattice = lattice or _chain(num_sites)
    if q_list is None:
        edge = pi / lattice.spacing
        axes = [np.linspace(-edge, edge, 16) for _ in range(lattice.ndim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        q_list = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    q_list = np.atleast_2d(np.asarray(q_list, dtype=float))

    def one(k: int) -> tuple[float, float]:
        purity = "mixed" if k % 2 == 0 else "pure"
        state, bloch = sample_product_spin_state(lattice.num_sites, purity, (seed, k))
        corr = spin.correlators(state)
        worst = np.inf
        disagreement = 0.0
        for q in q_list:
            direct = -spin_bound_raw(spin.structure_factor(corr, lattice, q))
            decomposed = product_witness_expectation(q, bloch, lattice)
            worst = min(worst, direct)
            disagreement = max(disagreement, abs(direct - decomposed))
        return worst, disagreement

    results = parallel_map(one, range(samples))
    margin = min((r[0] for r in results), default=np.inf)
    disagreement = max((r[1] for r in results), default=0.0)
    if disagreement > tolerance:
        raise InternalConsistencyError(
            f"direct and decomposed witness evaluations disagree by {disagreement}")
    return OracleReport(suite="spin-witness", seed=seed, samples=samples,
                        margin=float(margin), tolerance=tolerance,
                        passed=bool(margin >= -tolerance),
                        extra={"dual_path_disagreement": disagreement,
                               "q_points": int(q_list.shape[0])})


def check_uncertainty(samples: int = 10_000, seed: int = 0, *,
                      tolerance: float = 1e-12) -> OracleReport:
    """Single-qubit uncertainty floor: sum_alpha (1 - <sigma_alpha>^2) >= 2.

    Mixed samples probe the inequality; pure samples must additionally sit on
    the equality within 1e-10.
    """
    def value(rho: np.ndarray) -> float:
        b = np.real(np.einsum("aij,ji->a", _PAULIS, rho))
        return float(np.sum(1.0 - b * b))

    def one(k: int) -> tuple[float, float]:
        rng = _rng(seed, k)
        v_mixed = value(_qubit_rho(sample_bloch_vector(rng, "mixed")))
        v = _haar_qubit(rng)
        v_pure = value(np.outer(v, v.conj()))
        return min(v_mixed, v_pure) - 2.0, abs(v_pure - 2.0)

    results = parallel_map(one, range(samples))
    margin = min((r[0] for r in results), default=np.inf)
    pure_dev = max((r[1] for r in results), default=0.0)
    passed = margin >= -tolerance and pure_dev <= 1e-10
    return OracleReport(suite="uncertainty", seed=seed, samples=samples,
                        margin=float(margin), tolerance=tolerance, passed=bool(passed),
                        extra={"pure_equality_deviation": pure_dev})


def sample_ssr_separable(num_sites: int, num_particles: int, terms: int, seed) -> bosons.BosonState:
    """Random mixture of on-site Fock products within one fixed-N sector.

    These are exactly the number-superselected separable states: diagonal in
    the occupation basis, so every one-body off-diagonal coherence vanishes.
    """
    if terms < 1:
        raise ValidationError(f"need at least one mixture term, got {terms}")
    basis = bosons.enumerate_sector(num_sites, num_particles)
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, basis.dim, size=terms)
    probs = rng.dirichlet(np.ones(terms))
    rho = np.zeros((basis.dim, basis.dim))
    for idx, p in zip(picks, probs):
        rho[idx, idx] += p
    blk = bosons.SectorBlock(N=num_particles, basis=basis, weight=1.0, rho=rho)
    return bosons.BosonState(blocks=[blk])


@dataclass(eq=False)
class SectorWitness:
    """W_N = P_N (n(x,y)/f(x,y) - N) P_N on the fixed-N Fock sector."""

    matrix: np.ndarray
    num_sites: int
    num_particles: int
    x: float
    y: float

    @property
    def spectral_cap(self) -> float:
        """MN: proven bound on |eig(W_N)|."""
        return float(self.num_sites * self.num_particles)


def build_sector_witness(num_sites: int, num_particles: int, x: float, y: float,
                         calib: TofCalibration, *,
                         lattice: Optional[Lattice] = None) -> SectorWitness:
    """Assemble the sector witness at one detector point.

    The diagonal vanishes identically (f_ii = f), so separable fixed-N states
    give expectation exactly zero; entangled states can push it negative, and
    the spectrum is confined to [-MN, MN].
    """
    if lattice is None:
        if calib.lattice is not None and np.prod(calib.lattice.dims) == num_sites:
            lattice = build_lattice(calib.lattice)
        else:
            lattice = _chain(num_sites)
    basis = bosons.enumerate_sector(num_sites, num_particles)
    ratio = kernel_ratio_matrix([x], [y], lattice, calib)[0]
    W = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i in range(num_sites):
        for j in range(num_sites):
            if i == j:
                continue
            A = bosons.hop_matrix(basis, i, j).tocoo()
            W[A.row, A.col] += ratio[i, j] * A.data
    # diagonal: sum_i (f_ii/f) n_i - N = 0 exactly
    W = 0.5 * (W + W.conj().T)
    return SectorWitness(matrix=W, num_sites=num_sites, num_particles=num_particles,
                         x=float(x), y=float(y))


def sector_witness_expectation(state: bosons.BosonState, witness: SectorWitness) -> float:
    """tr[rho_N W_N] for the matching sector block (>= 0 for separable states)."""
    for blk in state.blocks:
        if blk.N == witness.num_particles:
            if blk.is_pure:
                val = complex(blk.vector.conj() @ (witness.matrix @ blk.vector))
            else:
                val = complex(np.trace(blk.rho @ witness.matrix))
            return float(val.real)
    raise InputError(f"state has no N={witness.num_particles} sector")


def _default_calibration() -> TofCalibration:
    return TofCalibration(units="natural", mass=1.0, flight_time=1.0,
                          wannier_width=0.15, far_field=False)


def check_sector_witness_eigs(M_max: int = 4, N_max: int = 3, points: int = 16,
                              seed: int = 0, *, calib: Optional[TofCalibration] = None,
                              separable_samples: int = 500,
                              tolerance: float = 1e-9) -> OracleReport:
    """Spectral containment MN >= |eig(W_N)| and separable non-negativity.

    Detector points are sampled uniformly over the first-zone image, for every
    (M <= M_max, N <= N_max) sector. Margin is the worst of the eigenvalue
    slack min eig(MN +- W_N) and the sampled separable expectations.
    """
    calib = calib or _default_calibration()
    combos = [(m, n) for m in range(1, M_max + 1) for n in range(1, N_max + 1)]
    margin = np.inf
    checked = 0
    for ci, (m, n) in enumerate(combos):
        lattice = _chain(m)
        extent = pi / (calib.momentum_scale * lattice.spacing)
        for p in range(points):
            rng = _rng(seed, ci, p)
            x, y = rng.uniform(-extent, extent, size=2)
            W = build_sector_witness(m, n, x, y, calib, lattice=lattice)
            cap = W.spectral_cap
            eigs = np.linalg.eigvalsh(W.matrix)
            margin = min(margin, cap - float(eigs.max()), cap + float(eigs.min()))
            checked += 1
    for k in range(separable_samples):
        m, n = combos[k % len(combos)]
        rng = _rng(seed, 10_000, k)
        lattice = _chain(m)
        extent = pi / (calib.momentum_scale * lattice.spacing)
        x, y = rng.uniform(-extent, extent, size=2)
        W = build_sector_witness(m, n, x, y, calib, lattice=lattice)
        state = sample_ssr_separable(m, n, terms=int(rng.integers(1, 6)), seed=(seed, 20_000, k))
        margin = min(margin, sector_witness_expectation(state, W))
    return OracleReport(suite="sector-eigs", seed=seed, samples=checked + separable_samples,
                        margin=float(margin), tolerance=tolerance,
                        passed=bool(margin >= -tolerance),
                        extra={"combos": len(combos), "points": points,
                               "separable_samples": separable_samples})


def check_ssr_separable(M_max: int = 4, N_max: int = 3, samples: int = 500,
                        seed: int = 0, *, tolerance: float = 1e-12) -> OracleReport:
    """Number-superselected separable states carry no one-body coherence.

    Margin is minus the largest off-diagonal magnitude of G over all samples
    (0 is a clean pass; anything above 1e-12 fails).
    """
    combos = [(m, n) for m in range(1, M_max + 1) for n in range(0, N_max + 1)]
    worst = 0.0
    for k in range(samples):
        m, n = combos[k % len(combos)]
        rng = _rng(seed, k)
        state = sample_ssr_separable(m, n, terms=int(rng.integers(1, 6)), seed=(seed, k, 1))
        G = bosons.one_body_dm(state).G
        off = G - np.diag(np.diag(G))
        worst = max(worst, float(np.max(np.abs(off))))
    return OracleReport(suite="ssr-separable", seed=seed, samples=samples,
                        margin=float(-worst), tolerance=tolerance,
                        passed=bool(worst <= tolerance),
                        extra={"max_offdiagonal": worst})


# ---------------------------------------------------------------------------
# Feasible upper bound on the entangled weight (two qubits)
# ---------------------------------------------------------------------------

def _partial_traces(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    r = rho.reshape(2, 2, 2, 2)
    return np.einsum("ikjk->ij", r), np.einsum("kikj->ij", r)


def _closest_product_vector(vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    u, s, vh = np.linalg.svd(vec.reshape(2, 2))
    return u[:, 0], vh[0].conj()


def _ensemble_rho(weights: np.ndarray, site_a: np.ndarray, site_b: np.ndarray) -> np.ndarray:
    rho = np.zeros((4, 4), dtype=complex)
    for w, a, b in zip(weights, site_a, site_b):
        ab = np.kron(a, b)
        rho += w * np.outer(ab, ab.conj())
    return rho


def _max_feasible_weight(rho: np.ndarray, rho_sep: np.ndarray,
                         feas_tol: float = -1e-10) -> float:
    """Largest verified s with rho - s*rho_sep PSD (bisection, certified at return)."""
    def feasible(s: float) -> bool:
        return float(np.linalg.eigvalsh(rho - s * rho_sep).min()) >= feas_tol

    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    if not feasible(lo):
        return 0.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _marginal_product_ensemble(rho: np.ndarray):
    """Product of the two marginals, written as a pure-product ensemble."""
    ra, rb = _partial_traces(rho)
    wa, va = np.linalg.eigh(ra)
    wb, vb = np.linalg.eigh(rb)
    weights, sa, sb = [], [], []
    for i in range(2):
        for j in range(2):
            weights.append(max(wa[i].real, 0.0) * max(wb[j].real, 0.0))
            sa.append(va[:, i])
            sb.append(vb[:, j])
    w = np.array(weights)
    total = w.sum()
    return (w / total if total > 0 else np.full(4, 0.25)), np.array(sa), np.array(sb)


def _eigvector_product_ensemble(rho: np.ndarray):
    """Each eigenvector snapped to its closest product vector, weighted by eigenvalue."""
    evals, vecs = np.linalg.eigh(rho)
    weights, sa, sb = [], [], []
    for k in range(4):
        if evals[k] <= 1e-14:
            continue
        a, b = _closest_product_vector(vecs[:, k])
        weights.append(float(evals[k]))
        sa.append(a)
        sb.append(b)
    if not weights:
        return _marginal_product_ensemble(rho)
    w = np.array(weights)
    return w / w.sum(), np.array(sa), np.array(sb)


def _random_ensemble(rng: np.random.Generator, terms: int):
    sa = np.empty((terms, 2), dtype=complex)
    sb = np.empty((terms, 2), dtype=complex)
    for k in range(terms):
        sa[k] = _haar_qubit(rng)
        sb[k] = _haar_qubit(rng)
    return rng.dirichlet(np.ones(terms)), sa, sb


def _perturb_ensemble(rng: np.random.Generator, ens, step: float):
    weights, sa, sb = ens
    terms = weights.size
    w = weights + step * rng.standard_normal(terms)
    w = np.clip(w, 1e-6, None)
    w /= w.sum()
    sa = sa + step * (rng.standard_normal(sa.shape) + 1j * rng.standard_normal(sa.shape))
    sb = sb + step * (rng.standard_normal(sb.shape) + 1j * rng.standard_normal(sb.shape))
    sa /= np.linalg.norm(sa, axis=1)[:, None]
    sb /= np.linalg.norm(sb, axis=1)[:, None]
    return w, sa, sb


def bsa_feasible_upper(rho: np.ndarray, effort: int = 1, seed: int = 0) -> float:
    """Certified upper bound on the entangled weight of a two-qubit state.

    Searches decompositions rho = s * rho_sep + (1 - s) * tau over explicit
    product-state ensembles rho_sep, maximizing the separable weight s subject
    to rho - s * rho_sep remaining PSD (so tau is a state). Every accepted s is
    re-verified by an eigenvalue check, hence 1 - s_best is always a valid
    upper bound on the optimal entangled weight, and any lower bound the map
    reports must stay below it. Higher ``effort`` adds random restarts and
    local refinement steps; with the same seed the result is non-increasing in
    effort. Returns 1.0 when no decomposition with s > 0 is found (e.g. pure
    entangled states).
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"expected a 4x4 two-qubit state, got {rho.shape}")
    if abs(np.trace(rho).real - 1.0) > 1e-9 or np.max(np.abs(rho - rho.conj().T)) > 1e-9:
        raise ValidationError("input is not a unit-trace Hermitian matrix")
    if float(np.linalg.eigvalsh(rho).min()) < -1e-9:
        raise ValidationError("input is not positive semidefinite")
    if effort < 1:
        raise ValidationError(f"effort must be >= 1, got {effort}")

    candidates = [_marginal_product_ensemble(rho), _eigvector_product_ensemble(rho)]
    evals, vecs = np.linalg.eigh(rho)
    a, b = _closest_product_vector(vecs[:, -1])
    candidates.append((np.array([1.0]), np.array([a]), np.array([b])))
    n_random = 4 * effort
    for r in range(n_random):
        rng = _rng(seed, 1, r)
        candidates.append(_random_ensemble(rng, terms=2 + 2 * (r % 3)))

    s_best = 0.0
    steps = 30 * effort
    for ci, ens in enumerate(candidates):
        weights, sa, sb = ens
        s_cur = _max_feasible_weight(rho, _ensemble_rho(weights, sa, sb))
        rng = _rng(seed, 2, ci)
        step = 0.3
        for _ in range(steps):
            trial = _perturb_ensemble(rng, (weights, sa, sb), step)
            s_trial = _max_feasible_weight(rho, _ensemble_rho(*trial))
            if s_trial > s_cur:
                s_cur = s_trial
                weights, sa, sb = trial
            else:
                step = max(0.02, step * 0.97)
        s_best = max(s_best, s_cur)
        if s_best >= 1.0:
            break
    return 1.0 - s_best


def ppt_min_eigenvalue(rho: np.ndarray) -> float:
    """Smallest eigenvalue of the partial transpose (negative iff entangled, 2 qubits)."""
    r = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    rt = np.transpose(r, (0, 3, 2, 1)).reshape(4, 4)
    return float(np.linalg.eigvalsh(rt).min())


def _random_two_qubit_state(rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def check_bsa_consistency(samples: int = 200, seed: int = 0, *, effort: int = 1,
                          q_resolution: int = 16, tolerance: float = 1e-6) -> OracleReport:
    """E(q) from the structure factor never exceeds the feasible upper bound.

    Random two-qubit states are mapped onto a two-site chain; for each, the
    maximum of E(q) over the q grid must stay below bsa_feasible_upper + 1e-6.
    A violation would mean the bound claims more entanglement than an explicit
    decomposition permits — a falsifier for either side.
    """
    lattice = _chain(2)
    qs = np.linspace(-pi, pi, q_resolution).reshape(-1, 1)

    def one(k: int) -> float:
        rho = _random_two_qubit_state(_rng(seed, k))
        state = spin.SpinState(num_sites=2, rho=rho)
        corr = spin.correlators(state)
        e_max = 0.0
        for q in qs:
            e_max = max(e_max, max(0.0, spin_bound_raw(spin.structure_factor(corr, lattice, q))))
        upper = bsa_feasible_upper(rho, effort=effort, seed=int(_rng(seed, k, 1).integers(2**32)))
        return upper - e_max

    margins = parallel_map(one, range(samples))
    margin = min(margins, default=np.inf)
    return OracleReport(suite="bsa-consistency", seed=seed, samples=samples,
                        margin=float(margin), tolerance=tolerance,
                        passed=bool(margin >= -tolerance),
                        extra={"effort": effort, "q_resolution": q_resolution})


SUITES = {
    "spin-witness": check_spin_witness,
    "uncertainty": check_uncertainty,
    "sector-eigs": check_sector_witness_eigs,
    "ssr-separable": check_ssr_separable,
    "bsa-consistency": check_bsa_consistency,
}
