"""Time-of-flight expansion model mapping one-body coherences to detector densities.

After ballistic expansion for time t, the column-integrated detector density is

    n(x, y) = sum_ij f_ij(x, y) G_ij,
    f_ij(x, y) = integral dz (m/hbar t)^3 |w(k)|^2
                 exp(i [k.(r_i - r_j) + (m / 2 hbar t)(r_j^2 - r_i^2)]),
    k = m (x, y, z) / (hbar t),

with a Gaussian on-site orbital |w(k)|^2 = 8 pi^(3/2) s^3 exp(-s^2 |k|^2)
normalized so that (2 pi)^-3 integral |w|^2 d^3k = 1. The quadratic phase is
dropped in far-field mode. For Gaussian orbitals the z-integral is analytic
when all sites sit in the z = 0 plane; non-planar lattices go through
adaptive quadrature.

Units are either SI or "natural" (hbar = 1; the test default uses m = t = 1
and lengths in units of the lattice spacing).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from math import pi, sqrt
from typing import Optional

import numpy as np
from scipy import constants
from scipy.integrate import quad

from .errors import FormatError, NumericError, ValidationError
from .lattice import Lattice, LatticeSpec, build_lattice

UNITS = ("SI", "natural")

CALIBRATION_FIELDS = ("units", "mass", "flight_time", "wannier_width",
                      "far_field", "mean_atom_number", "lattice")
_REQUIRED_CALIB = ("units", "mass", "flight_time", "wannier_width")


@dataclass(frozen=True)
class TofCalibration:
    """Expansion parameters tying detector coordinates to momenta."""

    units: str = "natural"
    mass: float = 1.0
    flight_time: float = 1.0
    wannier_width: float = 0.15
    far_field: bool = False
    mean_atom_number: Optional[float] = None
    lattice: Optional[LatticeSpec] = None

    def __post_init__(self):
        if self.units not in UNITS:
            raise ValidationError(f"units must be one of {UNITS}, got {self.units!r}")
        for name in ("mass", "flight_time", "wannier_width"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive and finite, got {v}")
        if self.mean_atom_number is not None and not (
                np.isfinite(self.mean_atom_number) and self.mean_atom_number > 0):
            raise ValidationError(
                f"mean_atom_number must be positive, got {self.mean_atom_number}")

    @property
    def hbar(self) -> float:
        return 1.0 if self.units == "natural" else constants.hbar

    @property
    def momentum_scale(self) -> float:
        """c = m / (hbar t): detector position x maps to momentum k = c x."""
        return self.mass / (self.hbar * self.flight_time)

    def with_mean_atom_number(self, n: float) -> "TofCalibration":
        return replace(self, mean_atom_number=float(n))

    def to_json_dict(self) -> dict:
        out = {"units": self.units, "mass": self.mass, "flight_time": self.flight_time,
               "wannier_width": self.wannier_width, "far_field": self.far_field}
        if self.mean_atom_number is not None:
            out["mean_atom_number"] = self.mean_atom_number
        if self.lattice is not None:
            out["lattice"] = self.lattice.to_json_dict()
        return out

    @classmethod
    def from_json_dict(cls, data: dict, *, path: str | None = None) -> "TofCalibration":
        if not isinstance(data, dict):
            raise FormatError("calibration JSON must be an object", path=path, code="bad-header")
        unknown = set(data) - set(CALIBRATION_FIELDS)
        if unknown:
            raise FormatError(f"unknown calibration field(s) {sorted(unknown)}",
                              path=path, code="unknown-field")
        missing = set(_REQUIRED_CALIB) - set(data)
        if missing:
            raise FormatError(f"missing calibration field(s) {sorted(missing)}",
                              path=path, code="missing-field")
        lattice = None
        if data.get("lattice") is not None:
            lattice = LatticeSpec.from_json_dict(data["lattice"], path=path)
        try:
            return cls(units=data["units"], mass=float(data["mass"]),
                       flight_time=float(data["flight_time"]),
                       wannier_width=float(data["wannier_width"]),
                       far_field=bool(data.get("far_field", False)),
                       mean_atom_number=(None if data.get("mean_atom_number") is None
                                         else float(data["mean_atom_number"])),
                       lattice=lattice)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad calibration value: {exc}", path=path,
                              code="bad-cell") from exc


def calibration_to_json(calib: TofCalibration) -> str:
    return json.dumps(calib.to_json_dict(), indent=2, sort_keys=True) + "\n"


def calibration_from_json(text: str, *, path: str | None = None) -> TofCalibration:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}", path=path, line=exc.lineno,
                          code="bad-cell") from exc
    return TofCalibration.from_json_dict(data, path=path)


def wannier_sq(k, calib: TofCalibration):
    """|w(k)|^2 for the normalized Gaussian orbital; k is a 3-vector or (..., 3) array."""
    s = calib.wannier_width
    k = np.asarray(k, dtype=float)
    norm = 8.0 * pi ** 1.5 * s ** 3
    return norm * np.exp(-s * s * np.sum(k * k, axis=-1))


def positions_3d(lattice: Lattice) -> np.ndarray:
    """Site positions embedded in 3-space (missing axes padded with zeros)."""
    pos = lattice.positions
    out = np.zeros((pos.shape[0], 3))
    out[:, : pos.shape[1]] = pos
    return out


def is_planar(lattice: Lattice) -> bool:
    return lattice.ndim < 3 or bool(np.all(lattice.positions[:, 2] == 0.0))


def envelope_values(xs, ys, calib: TofCalibration) -> np.ndarray:
    """Vectorized diagonal kernel f(x, y) = f_ii(x, y) over paired coordinates.

    The simulator and the bound engine both evaluate f through this one code
    path over full coordinate arrays, so a density written as n = f * N and
    re-divided later recovers N exactly (no transcendental-path mismatch).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    c = calib.momentum_scale
    s = calib.wannier_width
    return 8.0 * pi ** 2 * (c * s) ** 2 * np.exp(-s * s * c * c * (xs * xs + ys * ys))


def f_envelope(x: float, y: float, calib: TofCalibration) -> float:
    """Scalar convenience wrapper around :func:`envelope_values`."""
    return float(envelope_values(np.array([x]), np.array([y]), calib)[0])


def _phase_vector(xs: np.ndarray, ys: np.ndarray, pos3: np.ndarray,
                  calib: TofCalibration) -> np.ndarray:
    """Per-site unit phases u so that the planar kernel is f * u_i * conj(u_j).

    Shape (P, M) for P detector points. Includes the per-site quadratic phase
    unless the calibration is far-field.
    """
    c = calib.momentum_scale
    phase = c * (np.outer(xs, pos3[:, 0]) + np.outer(ys, pos3[:, 1]))
    if not calib.far_field:
        phase = phase - 0.5 * c * np.sum(pos3 * pos3, axis=1)[None, :]
    return np.exp(1j * phase)


def _z_factor_matrix(pos3: np.ndarray, calib: TofCalibration) -> np.ndarray:
    """exp(-(z_i - z_j)^2 / (4 s^2)): the analytic z-integral's pair attenuation."""
    s = calib.wannier_width
    dz = pos3[:, 2][:, None] - pos3[:, 2][None, :]
    return np.exp(-dz * dz / (4.0 * s * s))


def tof_kernel(i: int, j: int, x: float, y: float, lattice: Lattice,
               calib: TofCalibration, *, method: str = "auto") -> complex:
    """Pair kernel f_ij(x, y); Hermitian in (i, j), and f_ii is the real envelope.

    ``method``: "auto" picks the analytic closed form for planar lattices and
    adaptive quadrature otherwise; "analytic" and "quadrature" force a path.
    """
    if method not in ("auto", "analytic", "quadrature"):
        raise ValidationError(f"unknown kernel method {method!r}")
    if method == "auto":
        method = "analytic" if is_planar(lattice) else "quadrature"
    pos3 = positions_3d(lattice)
    ri, rj = pos3[i], pos3[j]
    c = calib.momentum_scale
    if method == "analytic":
        f = f_envelope(x, y, calib)
        s = calib.wannier_width
        dz = ri[2] - rj[2]
        zfac = float(np.exp(-dz * dz / (4.0 * s * s)))
        phase = c * (x * (ri[0] - rj[0]) + y * (ri[1] - rj[1]))
        if not calib.far_field:
            phase += 0.5 * c * (float(rj @ rj) - float(ri @ ri))
        return f * zfac * complex(np.cos(phase), np.sin(phase))
    return _kernel_quadrature(ri, rj, x, y, calib)


def _kernel_quadrature(ri: np.ndarray, rj: np.ndarray, x: float, y: float,
                       calib: TofCalibration, rel_tol: float = 1e-8) -> complex:
    c = calib.momentum_scale
    dr = ri - rj
    quad_phase = 0.0 if calib.far_field else 0.5 * c * (float(rj @ rj) - float(ri @ ri))

    def integrand(z: float, part: int) -> float:
        k = c * np.array([x, y, z])
        phase = float(k @ dr) + quad_phase
        amp = c ** 3 * float(wannier_sq(k, calib))
        return amp * (np.cos(phase) if part == 0 else np.sin(phase))

    re, re_err = quad(integrand, -np.inf, np.inf, args=(0,), epsabs=0.0,
                      epsrel=rel_tol, limit=400)
    im, im_err = quad(integrand, -np.inf, np.inf, args=(1,), epsabs=0.0,
                      epsrel=rel_tol, limit=400)
    mag = max(abs(re), abs(im), 1e-300)
    if max(re_err, im_err) > 10 * rel_tol * mag + 1e-250:
        raise NumericError(
            f"kernel quadrature error {max(re_err, im_err)} exceeds tolerance at ({x}, {y})")
    return complex(re, im)


def kernel_ratio_matrix(xs, ys, lattice: Lattice, calib: TofCalibration) -> np.ndarray:
    """f_ij(x, y) / f(x, y) for all pairs at each detector point; shape (P, M, M)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    pos3 = positions_3d(lattice)
    u = _phase_vector(xs, ys, pos3, calib)
    ratio = u[:, :, None] * u.conj()[:, None, :]
    zfac = _z_factor_matrix(pos3, calib)
    return ratio * zfac[None, :, :]


def tof_density(G: np.ndarray, x: float, y: float, lattice: Lattice,
                calib: TofCalibration) -> float:
    """n(x, y) = sum_ij f_ij G_ij for a Hermitian one-body matrix G."""
    return float(tof_density_grid(G, np.array([x]), np.array([y]), lattice, calib)[0])


def tof_density_grid(G: np.ndarray, xs: np.ndarray, ys: np.ndarray,
                     lattice: Lattice, calib: TofCalibration) -> np.ndarray:
    """Vectorized detector density over paired coordinate arrays.

    The diagonal (envelope) part is split out so that coherence-free states
    produce exactly n = f * sum_i G_ii with no phase-arithmetic residue.
    """
    G = np.asarray(G)
    M = lattice.num_sites
    if G.shape != (M, M):
        raise ValidationError(f"G must be {M}x{M}, got {G.shape}")
    herm_resid = float(np.max(np.abs(G - G.conj().T))) if M else 0.0
    scale_G = float(np.max(np.abs(G))) if M else 0.0
    if herm_resid > 1e-9 * max(scale_G, 1.0):
        raise ValidationError(f"G is not Hermitian (residue {herm_resid})")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    pos3 = positions_3d(lattice)
    diag_sum = float(np.sum(np.real(np.diag(G))))
    G_off = np.array(G, dtype=complex)
    np.fill_diagonal(G_off, 0.0)
    G_off *= _z_factor_matrix(pos3, calib)
    f = envelope_values(xs, ys, calib)
    if np.any(G_off):
        u = _phase_vector(xs, ys, pos3, calib)
        cross = np.einsum("pi,ij,pj->p", u, G_off, u.conj())
        resid = float(np.max(np.abs(cross.imag)))
        if resid > 1e-9 * max(1.0, diag_sum, float(np.max(np.abs(cross)))):
            raise NumericError(f"detector density imaginary residue {resid}")
        return f * (diag_sum + cross.real)
    return f * diag_sum
