"""Entanglement lower bounds from measured observables.

Spin systems: every fully separable M-qubit state obeys S(q) >= 2, so

    E(q) = max{0, 1 - S(q)/2}

is a lower bound on the distance to the closest separable state (the weight
of the entangled part in the best separable approximation). Bosons on a
lattice: for number-superselected separable states the time-of-flight
density satisfies n(x, y) = f(x, y) <N>, so

    E(x, y) = max{0, <N> - n(x, y)/f(x, y)}

lower-bounds the same quantity sector-by-sector. Raw (pre-clamp) values are
retained everywhere; clamping happens only in the published E column.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, NumericError, ValidationError
from .lattice import Lattice, build_lattice
from .spin import StructureFactorGrid
from .tof import TofCalibration, envelope_values

MASK_OK = "ok"
MASK_F_FLOOR = "f-floor"
MASK_NEGATIVE_S = "negative-S"
MASK_MISSING = "missing-data"
MASK_CODES = (MASK_OK, MASK_F_FLOOR, MASK_NEGATIVE_S, MASK_MISSING)

S_NEGATIVE_TOL = 1e-9
DEFAULT_F_FLOOR = 1e-6
# pixels with n/f below -1e-9 * <N> are treated as corrupt rather than clamped
_N_NOISE_REL = 1e-9


def spin_bound_raw(S: float) -> float:
    """Pre-clamp witness value 1 - S/2 (negative values mean 'not detected')."""
    return 1.0 - 0.5 * float(S)


def spin_bound(S: float) -> float:
    """E = max{0, 1 - S/2}; rejects structure factors negative beyond tolerance."""
    S = float(S)
    if not np.isfinite(S):
        raise ValidationError(f"structure factor must be finite, got {S}")
    if S < -S_NEGATIVE_TOL:
        raise ValidationError(f"structure factor {S} < -1e-9 is not physical")
    return max(0.0, spin_bound_raw(S))


def boson_bound_raw(n_val: float, f_val: float, mean_number: float) -> float:
    return float(mean_number) - float(n_val) / float(f_val)


def boson_bound(n_val: float, f_val: float, mean_number: float, *,
                f_floor: float = 0.0) -> float:
    """E = max{0, <N> - n/f}; rejects unusable pixels instead of guessing."""
    if not np.isfinite(n_val) or not np.isfinite(f_val):
        raise ValidationError(f"non-finite pixel (n={n_val}, f={f_val})")
    if f_val <= f_floor or f_val <= 0.0:
        raise ValidationError(f"envelope {f_val} at or below floor {f_floor}")
    if n_val < -_N_NOISE_REL * mean_number * f_val:
        raise ValidationError(f"negative density {n_val} beyond noise tolerance")
    return max(0.0, boson_bound_raw(n_val, f_val, mean_number))


@dataclass(eq=False)
class BoundMap:
    """Bound values over a detector or scattering grid, with per-point masks.

    Masked points carry no raw/E value (NaN placeholders internally, empty
    cells in CSV). ``columns`` holds the observable columns by name, in CSV
    order — ("S",) for spin maps, ("n", "f") for boson maps.
    """

    kind: str                       # "spin" | "boson"
    coord_names: tuple[str, ...]
    coords: np.ndarray              # (n, d)
    columns: dict                   # name -> ndarray
    raw: np.ndarray
    E: np.ndarray
    mask: np.ndarray                # object array of mask codes
    comments: tuple[str, ...] = ()

    def __post_init__(self):
        bad = set(np.unique(self.mask)) - set(MASK_CODES)
        if bad:
            raise ValidationError(f"unknown mask code(s) {sorted(bad)}")

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def ok(self) -> np.ndarray:
        return self.mask == MASK_OK

    @property
    def all_masked(self) -> bool:
        return bool(len(self) and not self.ok.any())

    def column_names(self) -> tuple[str, ...]:
        return self.coord_names + tuple(self.columns) + ("raw", "E", "mask")

    def with_comments(self, comments) -> "BoundMap":
        return BoundMap(kind=self.kind, coord_names=self.coord_names, coords=self.coords,
                        columns=self.columns, raw=self.raw, E=self.E, mask=self.mask,
                        comments=tuple(comments))


def spin_bound_values(S: np.ndarray, flags=None):
    """Vectorized raw/E/mask triplet for structure-factor samples."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    raw = np.full(n, np.nan)
    E = np.full(n, np.nan)
    mask = np.full(n, MASK_OK, dtype=object)
    for k in range(n):
        if flags is not None and flags[k] != MASK_OK:
            mask[k] = flags[k]
            continue
        if not np.isfinite(S[k]):
            mask[k] = MASK_MISSING
            continue
        if S[k] < -S_NEGATIVE_TOL:
            mask[k] = MASK_NEGATIVE_S
            continue
        raw[k] = spin_bound_raw(S[k])
        E[k] = max(0.0, raw[k])
    return raw, E, mask


def spin_bound_map(sf, flags=None, comments=()) -> BoundMap:
    """BoundMap from a StructureFactorGrid or any (coords, S) dataset.

    Rows whose S is negative beyond tolerance are masked ``negative-S`` and
    retained, matching how lab data with a bad pixel should be handled.
    """
    if isinstance(sf, StructureFactorGrid):
        coords, S, names = sf.qs, sf.S, sf.coord_names
    else:  # duck-typed: SqDataset and friends
        coords, S, names = sf.qs, sf.S, tuple(sf.coord_names)
        if flags is None:
            flags = getattr(sf, "flags", None)
    raw, E, mask = spin_bound_values(S, flags)
    return BoundMap(kind="spin", coord_names=tuple(names),
                    coords=np.asarray(coords, dtype=float), columns={"S": np.asarray(S, dtype=float)},
                    raw=raw, E=E, mask=mask, comments=tuple(comments))


def _resolve_lattice(calib: TofCalibration, lattice: Optional[Lattice]) -> Lattice:
    if lattice is not None:
        return lattice
    if calib.lattice is None:
        raise InputError("no lattice given and calibration carries none")
    return build_lattice(calib.lattice)


def boson_bound_map(image, calib: TofCalibration, lattice: Optional[Lattice] = None,
                    *, f_floor: float = DEFAULT_F_FLOOR, comments=()) -> BoundMap:
    """BoundMap over a TOF image.

    ``f_floor`` is a fraction of the maximum envelope value on the grid;
    pixels at or below the floor are masked ``f-floor``. The mean atom number
    is taken from the image metadata if present, else from the calibration.
    """
    lattice = _resolve_lattice(calib, lattice)
    n_mean = image.mean_atom_number
    if n_mean is None:
        n_mean = calib.mean_atom_number
    if n_mean is None:
        raise InputError("mean atom number missing from both image metadata and calibration")
    n_mean = float(n_mean)
    coords = image.position_coords(calib)
    vals = np.asarray(image.values, dtype=float).reshape(-1)
    npts = coords.shape[0]
    f = envelope_values(coords[:, 0], coords[:, 1], calib)
    floor_abs = f_floor * (float(f.max()) if npts else 0.0)
    raw = np.full(npts, np.nan)
    E = np.full(npts, np.nan)
    mask = np.full(npts, MASK_OK, dtype=object)
    for k in range(npts):
        if not np.isfinite(vals[k]):
            mask[k] = MASK_MISSING
            continue
        if f[k] <= floor_abs or f[k] <= 0.0:
            mask[k] = MASK_F_FLOOR
            continue
        if vals[k] < -_N_NOISE_REL * n_mean * f[k]:
            mask[k] = MASK_MISSING
            continue
        raw[k] = boson_bound_raw(vals[k], f[k], n_mean)
        E[k] = max(0.0, raw[k])
    return BoundMap(kind="boson", coord_names=("x", "y"), coords=coords,
                    columns={"n": vals, "f": f}, raw=raw, E=E, mask=mask,
                    comments=tuple(comments))


def product_witness_expectation(q: np.ndarray, bloch: np.ndarray, lattice: Lattice) -> float:
    """<S(q)/2 - 1> for the product state with per-site Bloch vectors ``bloch``.

    Evaluated through the single-qubit-uncertainty decomposition

        (1/2M) sum_{i,alpha} (1 - b_i_alpha^2) - 1
        + (1/2M) sum_alpha |sum_i e^{iq.r_i} b_i_alpha|^2,

    which is manifestly >= 0: the first line is >= 0 by the Bloch-ball
    uncertainty relation sum_alpha (1 - b_alpha^2) >= 2, the second is a sum
    of squared moduli. Used as the independent cross-check of the direct
    correlator evaluation.
    """
    bloch = np.asarray(bloch, dtype=float)
    M = lattice.num_sites
    if bloch.shape != (3, M):
        raise ValidationError(f"bloch must have shape (3, {M}), got {bloch.shape}")
    norms = np.linalg.norm(bloch, axis=0)
    if norms.max() > 1 + 1e-10:
        raise ValidationError(f"Bloch vector norm {norms.max()} exceeds 1")
    p = np.exp(1j * (lattice.positions @ np.atleast_1d(np.asarray(q, dtype=float))))
    uncert = float(np.sum(1.0 - bloch * bloch)) / (2.0 * M) - 1.0
    coherent = float(np.sum(np.abs(bloch @ p) ** 2)) / (2.0 * M)
    value = uncert + coherent
    if value < -1e-10:
        raise NumericError(f"product witness expectation {value} < -1e-10")
    return value
