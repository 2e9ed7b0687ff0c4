"""Readers and writers for every on-disk format.

All text formats are comment-friendly CSV ('#' lines), carry the format
version in their header, and print floats with 17 significant digits so that
save -> load -> save is byte-identical. Loaders are total: malformed input
raises a typed error with a line number and no partial object escapes.
"""
from __future__ import annotations

import re
import struct
import warnings
from dataclasses import dataclass
from math import erf, pi
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .bounds import BoundMap, MASK_CODES, MASK_OK, MASK_NEGATIVE_S
from .errors import FormatError, InputError, ValidationError
from .lattice import Lattice, LatticeSpec, build_lattice, lattice_spec_from_json, lattice_to_json
from .spin import CorrelatorSet
from .tof import TofCalibration, calibration_from_json, calibration_to_json
from .util import FORMAT_VERSION, fmt_float, write_bytes_atomic, write_text_atomic


class CalibrationWarning(UserWarning):
    """The data disagrees with what the calibration predicts (smell, not error)."""


_TOF_MAGIC = b"ENTB"
_SQ_HEADERS = ("qx,S", "qx,S,sigma", "qx,qy,S", "qx,qy,S,sigma",
               "qx,qy,qz,S", "qx,qy,qz,S,sigma")
_MEAN_N_RE = re.compile(r"^mean_atom_number\s*=\s*(\S+)$")


def _parse_lines(text: str):
    """Yield (line_number, stripped_content) for non-blank, non-comment lines."""
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield ln, line


def _comment_lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("#"):
            out.append(line[1:].strip())
    return out


def _parse_float(cell: str, path: str, line: int) -> float:
    try:
        v = float(cell)
    except ValueError as exc:
        raise FormatError(f"cell {cell!r} is not a number", path=path, line=line,
                          code="bad-cell") from exc
    if not np.isfinite(v):
        raise FormatError(f"cell {cell!r} is not finite", path=path, line=line,
                          code="bad-cell")
    return v


def _header_line(comments) -> str:
    out = [f"# {FORMAT_VERSION}"]
    out.extend(f"# {c}" for c in comments)
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Structure-factor datasets
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class SqDataset:
    """Scattering-vector / structure-factor samples as loaded from disk."""

    coord_names: tuple[str, ...]
    qs: np.ndarray                  # (n, d)
    S: np.ndarray                   # (n,)
    sigma: Optional[np.ndarray]     # (n,) or None
    flags: np.ndarray               # per-row "ok" | "negative-S"
    lines: np.ndarray               # source line numbers

    def __len__(self) -> int:
        return self.S.shape[0]


def load_sq_csv(path: str | Path) -> SqDataset:
    """Load a `qx[,qy[,qz]],S[,sigma]` table; duplicate q vectors are an error."""
    path = str(path)
    text = Path(path).read_text()
    rows = list(_parse_lines(text))
    if not rows:
        raise FormatError("no header line found", path=path, code="bad-header")
    hline, header = rows[0]
    header_norm = ",".join(col.strip() for col in header.split(","))
    if header_norm not in _SQ_HEADERS:
        raise FormatError(f"unrecognized header {header!r} (expected one of "
                          f"{', '.join(_SQ_HEADERS)})", path=path, line=hline,
                          code="bad-header")
    names = tuple(header_norm.split(","))
    d = len(names) - (2 if names[-1] == "sigma" else 1)
    has_sigma = names[-1] == "sigma"
    qs, svals, sigmas, lines = [], [], [], []
    for ln, line in rows[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(names):
            raise FormatError(f"expected {len(names)} columns, got {len(cells)}",
                              path=path, line=ln, code="bad-cell")
        vals = [_parse_float(c, path, ln) for c in cells]
        qs.append(vals[:d])
        svals.append(vals[d])
        if has_sigma:
            sig = vals[d + 1]
            if sig < 0:
                raise FormatError(f"sigma must be >= 0, got {sig}", path=path,
                                  line=ln, code="bad-cell")
            sigmas.append(sig)
        lines.append(ln)
    if not qs:
        raise FormatError("no data rows", path=path, line=hline, code="missing-field")
    qarr = np.asarray(qs, dtype=float).reshape(len(qs), d)
    lines_arr = np.asarray(lines)
    _reject_duplicates(qarr, lines_arr, path)
    sarr = np.asarray(svals, dtype=float)
    flags = np.where(sarr < -1e-9, MASK_NEGATIVE_S, MASK_OK).astype(object)
    return SqDataset(coord_names=names[:d], qs=qarr, S=sarr,
                     sigma=np.asarray(sigmas) if has_sigma else None,
                     flags=flags, lines=lines_arr)


def _reject_duplicates(qarr: np.ndarray, lines: np.ndarray, path: str,
                       tol: float = 1e-12) -> None:
    n = qarr.shape[0]
    if n < 2:
        return
    order = np.lexsort(qarr.T[::-1])
    sorted_q = qarr[order]
    close = np.all(np.abs(np.diff(sorted_q, axis=0)) <= tol, axis=1)
    if close.any():
        k = int(np.argmax(close))
        a, b = lines[order[k]], lines[order[k + 1]]
        raise ValidationError(
            f"{path}: duplicate q vector on lines {min(a, b)} and {max(a, b)} "
            f"(within {tol})")


def save_sq_csv(qs: np.ndarray, S: np.ndarray, coord_names, path: str | Path,
                *, sigma: Optional[np.ndarray] = None, comments=()) -> None:
    names = list(coord_names) + ["S"] + (["sigma"] if sigma is not None else [])
    lines = [_header_line(comments), ",".join(names)]
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    for k in range(qs.shape[0]):
        cells = [fmt_float(v) for v in qs[k]] + [fmt_float(S[k])]
        if sigma is not None:
            cells.append(fmt_float(sigma[k]))
        lines.append(",".join(cells))
    write_text_atomic(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Time-of-flight images
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TofImage:
    """Detector image on a rectangular grid.

    Coordinates are positions unless ``k_space`` is set, in which case they
    are transverse momenta and convert to positions via x = k / (m / hbar t).
    """

    x_axis: np.ndarray              # (nx,)
    y_axis: np.ndarray              # (ny,)
    values: np.ndarray              # (nx, ny), row-major CSV/binary order
    k_space: bool = False
    mean_atom_number: Optional[float] = None

    @property
    def shape(self) -> tuple[int, int]:
        return (self.x_axis.size, self.y_axis.size)

    def coords(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.x_axis, self.y_axis, indexing="ij")
        return np.stack([gx.reshape(-1), gy.reshape(-1)], axis=-1)

    def position_coords(self, calib: TofCalibration) -> np.ndarray:
        c = self.coords()
        return c / calib.momentum_scale if self.k_space else c


def bz_axes(lattice_spec: LatticeSpec, nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
    """Centered first-zone k-grid used as the implicit coordinate frame of binary images."""
    edge = pi / lattice_spec.spacing
    return np.linspace(-edge, edge, nx), np.linspace(-edge, edge, ny)


def load_tof(path: str | Path, calib: TofCalibration, *,
             k_space: Optional[bool] = None) -> TofImage:
    """Load a detector image from CSV (`x,y,n` / `kx,ky,n`) or binary format.

    Binary images carry only grid dimensions and values; their coordinates are
    the centered first-zone k-grid of the calibration's lattice. ``k_space``
    overrides the CSV header's coordinate interpretation when set.
    """
    path = str(path)
    blob = Path(path).read_bytes()
    if blob[:4] == _TOF_MAGIC:
        img = _load_tof_binary(blob, path, calib)
    else:
        img = _load_tof_csv(blob, path, k_space)
    _integral_sanity_check(img, calib, path)
    return img


def _load_tof_binary(blob: bytes, path: str, calib: TofCalibration) -> TofImage:
    if len(blob) < 12:
        raise FormatError("binary image shorter than its 12-byte header",
                          path=path, code="truncated")
    nx, ny = struct.unpack_from("<II", blob, 4)
    if nx < 1 or ny < 1:
        raise FormatError(f"bad grid dimensions {nx}x{ny}", path=path,
                          code="grid-mismatch")
    expected = 12 + 8 * nx * ny
    if len(blob) < expected:
        raise FormatError(f"payload truncated: need {expected} bytes, have {len(blob)}",
                          path=path, code="truncated")
    if len(blob) > expected:
        raise FormatError(f"{len(blob) - expected} trailing bytes after payload",
                          path=path, code="trailing-data")
    values = np.frombuffer(blob, dtype="<f8", offset=12).reshape(nx, ny).copy()
    if not np.all(np.isfinite(values)):
        raise FormatError("non-finite pixel values", path=path, code="bad-cell")
    if calib.lattice is None:
        raise InputError(f"{path}: binary images need a calibration with a lattice "
                         f"to define their coordinate grid")
    x_axis, y_axis = bz_axes(calib.lattice, nx, ny)
    return TofImage(x_axis=x_axis, y_axis=y_axis, values=values, k_space=True,
                    mean_atom_number=calib.mean_atom_number)


def _load_tof_csv(blob: bytes, path: str, k_space: Optional[bool]) -> TofImage:
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("not a text file and magic does not match "
                          "the binary format", path=path, code="bad-magic") from exc
    mean_n = None
    for comment in _comment_lines(text):
        m = _MEAN_N_RE.match(comment)
        if m:
            mean_n = _parse_float(m.group(1), path, 0)
    rows = list(_parse_lines(text))
    if not rows:
        raise FormatError("no header line found", path=path, code="bad-header")
    hline, header = rows[0]
    header_norm = ",".join(c.strip() for c in header.split(","))
    if header_norm == "x,y,n":
        is_k = False
    elif header_norm == "kx,ky,n":
        is_k = True
    else:
        raise FormatError(f"unrecognized header {header!r} (expected x,y,n or kx,ky,n)",
                          path=path, line=hline, code="bad-header")
    if k_space is not None:
        is_k = k_space
    coords, vals = [], []
    for ln, line in rows[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 3:
            raise FormatError(f"expected 3 columns, got {len(cells)}", path=path,
                              line=ln, code="bad-cell")
        fv = [_parse_float(c, path, ln) for c in cells]
        coords.append(fv[:2])
        vals.append(fv[2])
    if not coords:
        raise FormatError("image has no pixels", path=path, code="grid-mismatch")
    carr = np.asarray(coords)
    varr = np.asarray(vals)
    x_axis = np.unique(carr[:, 0])
    y_axis = np.unique(carr[:, 1])
    nx, ny = x_axis.size, y_axis.size
    if nx * ny != carr.shape[0]:
        raise FormatError(f"coordinates do not form a rectangular grid "
                          f"({carr.shape[0]} pixels vs {nx}x{ny} axes)",
                          path=path, code="grid-mismatch")
    grid = np.full((nx, ny), np.nan)
    ix = np.searchsorted(x_axis, carr[:, 0])
    iy = np.searchsorted(y_axis, carr[:, 1])
    if len({(a, b) for a, b in zip(ix, iy)}) != carr.shape[0]:
        raise FormatError("duplicate pixel coordinates", path=path, code="grid-mismatch")
    grid[ix, iy] = varr
    return TofImage(x_axis=x_axis, y_axis=y_axis, values=grid, k_space=is_k,
                    mean_atom_number=mean_n)


def _integral_sanity_check(img: TofImage, calib: TofCalibration, path: str) -> None:
    n_mean = img.mean_atom_number if img.mean_atom_number is not None else calib.mean_atom_number
    if n_mean is None or img.x_axis.size < 2 or img.y_axis.size < 2:
        return
    c = calib.momentum_scale
    xs = img.x_axis / c if img.k_space else img.x_axis
    ys = img.y_axis / c if img.k_space else img.y_axis
    total = float(trapezoid(trapezoid(img.values, ys, axis=1), xs))
    # full-plane integral of the envelope is 8 pi^3; erf terms restrict to the grid box
    p = calib.wannier_width * c
    ex = 0.5 * (erf(p * xs[-1]) - erf(p * xs[0]))
    ey = 0.5 * (erf(p * ys[-1]) - erf(p * ys[0]))
    predicted = n_mean * 8.0 * pi ** 3 * ex * ey
    if predicted > 0 and abs(total - predicted) > 0.2 * predicted:
        warnings.warn(
            f"{path}: integrated density {total:.4g} deviates from the "
            f"calibration-predicted {predicted:.4g} by more than 20%",
            CalibrationWarning, stacklevel=3)


def save_tof_csv(img: TofImage, path: str | Path, *, comments=()) -> None:
    names = ("kx", "ky", "n") if img.k_space else ("x", "y", "n")
    lines = [_header_line(comments)]
    if img.mean_atom_number is not None:
        lines.append(f"# mean_atom_number = {fmt_float(img.mean_atom_number)}")
    lines.append(",".join(names))
    for i, x in enumerate(img.x_axis):
        for j, y in enumerate(img.y_axis):
            lines.append(",".join([fmt_float(x), fmt_float(y), fmt_float(img.values[i, j])]))
    write_text_atomic(path, "\n".join(lines) + "\n")


def save_tof_binary(img: TofImage, path: str | Path) -> None:
    nx, ny = img.shape
    payload = _TOF_MAGIC + struct.pack("<II", nx, ny)
    payload += np.ascontiguousarray(img.values, dtype="<f8").tobytes()
    write_bytes_atomic(path, payload)


# ---------------------------------------------------------------------------
# Bound maps
# ---------------------------------------------------------------------------

_SPIN_COORDS = {("qx",), ("qx", "qy"), ("qx", "qy", "qz")}


def save_bound_map(bmap: BoundMap, path: str | Path) -> None:
    lines = [_header_line(bmap.comments), ",".join(bmap.column_names())]
    cols = list(bmap.columns.values())
    for k in range(len(bmap)):
        cells = [fmt_float(v) for v in bmap.coords[k]]
        cells.extend(fmt_float(col[k]) for col in cols)
        if bmap.mask[k] == MASK_OK:
            cells.extend([fmt_float(bmap.raw[k]), fmt_float(bmap.E[k])])
        else:
            cells.extend(["", ""])
        cells.append(str(bmap.mask[k]))
        lines.append(",".join(cells))
    write_text_atomic(path, "\n".join(lines) + "\n")


def load_bound_map(path: str | Path) -> BoundMap:
    path = str(path)
    text = Path(path).read_text()
    raw_lines = text.splitlines()
    if not raw_lines or raw_lines[0].strip() != f"# {FORMAT_VERSION}":
        raise FormatError(f"first line must be '# {FORMAT_VERSION}'", path=path,
                          line=1, code="bad-version")
    comments = _comment_lines(text)[1:]
    rows = list(_parse_lines(text))
    if not rows:
        raise FormatError("no column header", path=path, code="bad-header")
    hline, header = rows[0]
    names = tuple(c.strip() for c in header.split(","))
    if names[-3:] != ("raw", "E", "mask"):
        raise FormatError(f"bad bound-map header {header!r}", path=path, line=hline,
                          code="bad-header")
    body = names[:-3]
    if body[-1:] == ("S",) and body[:-1] in _SPIN_COORDS:
        kind, coord_names, col_names = "spin", body[:-1], ("S",)
    elif body == ("x", "y", "n", "f"):
        kind, coord_names, col_names = "boson", ("x", "y"), ("n", "f")
    else:
        raise FormatError(f"bad bound-map header {header!r}", path=path, line=hline,
                          code="bad-header")
    d = len(coord_names)
    coords, columns, raws, Es, masks = [], {n: [] for n in col_names}, [], [], []
    for ln, line in rows[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(names):
            raise FormatError(f"expected {len(names)} columns, got {len(cells)}",
                              path=path, line=ln, code="bad-cell")
        mask = cells[-1]
        if mask not in MASK_CODES:
            raise FormatError(f"unknown mask code {mask!r}", path=path, line=ln,
                              code="bad-cell")
        coords.append([_parse_float(c, path, ln) for c in cells[:d]])
        for ci, n in enumerate(col_names):
            columns[n].append(_parse_float(cells[d + ci], path, ln))
        raw_cell, e_cell = cells[-3], cells[-2]
        if mask == MASK_OK:
            raws.append(_parse_float(raw_cell, path, ln))
            Es.append(_parse_float(e_cell, path, ln))
        else:
            if raw_cell or e_cell:
                raise FormatError("masked row must leave raw/E empty", path=path,
                                  line=ln, code="bad-cell")
            raws.append(np.nan)
            Es.append(np.nan)
        masks.append(mask)
    n_rows = len(coords)
    return BoundMap(kind=kind, coord_names=coord_names,
                    coords=np.asarray(coords, dtype=float).reshape(n_rows, d),
                    columns={n: np.asarray(v, dtype=float) for n, v in columns.items()},
                    raw=np.asarray(raws, dtype=float), E=np.asarray(Es, dtype=float),
                    mask=np.asarray(masks, dtype=object),
                    comments=tuple(comments))


# ---------------------------------------------------------------------------
# Correlators / one-body density matrices
# ---------------------------------------------------------------------------

_ALPHA_IDX = {"x": 0, "y": 1, "z": 2}


def save_correlators(corr: CorrelatorSet, path: str | Path, *, comments=()) -> None:
    """Write `alpha,i,j,value` rows, i <= j (the format carries no Bloch data)."""
    M = corr.num_sites
    lines = [_header_line(comments), "alpha,i,j,value"]
    for alpha, ai in _ALPHA_IDX.items():
        for i in range(M):
            for j in range(i, M):
                lines.append(f"{alpha},{i},{j},{fmt_float(corr.C[ai, i, j])}")
    write_text_atomic(path, "\n".join(lines) + "\n")


def load_correlators(path: str | Path) -> CorrelatorSet:
    """Read a correlator table; Bloch vectors default to zero (not in the format)."""
    path = str(path)
    rows = list(_parse_lines(Path(path).read_text()))
    if not rows:
        raise FormatError("no header line found", path=path, code="bad-header")
    hline, header = rows[0]
    if ",".join(c.strip() for c in header.split(",")) != "alpha,i,j,value":
        raise FormatError(f"expected header alpha,i,j,value, got {header!r}",
                          path=path, line=hline, code="bad-header")
    entries = {}
    max_site = -1
    for ln, line in rows[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 4:
            raise FormatError(f"expected 4 columns, got {len(cells)}", path=path,
                              line=ln, code="bad-cell")
        alpha = cells[0]
        if alpha not in _ALPHA_IDX:
            raise FormatError(f"alpha must be x, y or z, got {alpha!r}", path=path,
                              line=ln, code="bad-cell")
        try:
            i, j = int(cells[1]), int(cells[2])
        except ValueError as exc:
            raise FormatError(f"bad site index in {line!r}", path=path, line=ln,
                              code="bad-cell") from exc
        if i < 0 or j < i:
            raise FormatError(f"need 0 <= i <= j, got i={i} j={j}", path=path,
                              line=ln, code="bad-cell")
        v = _parse_float(cells[3], path, ln)
        if (alpha, i, j) in entries:
            raise FormatError(f"duplicate entry for ({alpha},{i},{j})", path=path,
                              line=ln, code="bad-cell")
        entries[(alpha, i, j)] = v
        max_site = max(max_site, j)
    M = max_site + 1
    if M == 0:
        raise FormatError("no correlator rows", path=path, code="bad-header")
    C = np.zeros((3, M, M))
    for alpha, ai in _ALPHA_IDX.items():
        for i in range(M):
            for j in range(i, M):
                key = (alpha, i, j)
                if key not in entries:
                    raise FormatError(f"missing entry for ({alpha},{i},{j})",
                                      path=path, code="missing-field")
                v = entries[key]
                if i == j:
                    if v != 1.0:
                        raise ValidationError(
                            f"{path}: C[{alpha}][{i}][{i}] must be exactly 1, got {v}")
                    C[ai, i, i] = 1.0
                else:
                    if abs(v) > 1 + 1e-10:
                        raise ValidationError(
                            f"{path}: |C[{alpha}][{i}][{j}]| = {abs(v)} exceeds 1")
                    C[ai, i, j] = C[ai, j, i] = v
    return CorrelatorSet(C=C, b=np.zeros((3, M)))


def save_one_body_dm(G: np.ndarray, path: str | Path, *, comments=()) -> None:
    M = G.shape[0]
    lines = [_header_line(comments), "i,j,re,im"]
    for i in range(M):
        for j in range(M):
            lines.append(f"{i},{j},{fmt_float(G[i, j].real)},{fmt_float(G[i, j].imag)}")
    write_text_atomic(path, "\n".join(lines) + "\n")


def load_one_body_dm(path: str | Path) -> np.ndarray:
    path = str(path)
    rows = list(_parse_lines(Path(path).read_text()))
    if not rows:
        raise FormatError("no header line found", path=path, code="bad-header")
    hline, header = rows[0]
    if ",".join(c.strip() for c in header.split(",")) != "i,j,re,im":
        raise FormatError(f"expected header i,j,re,im, got {header!r}", path=path,
                          line=hline, code="bad-header")
    entries = {}
    max_site = -1
    for ln, line in rows[1:]:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != 4:
            raise FormatError(f"expected 4 columns, got {len(cells)}", path=path,
                              line=ln, code="bad-cell")
        try:
            i, j = int(cells[0]), int(cells[1])
        except ValueError as exc:
            raise FormatError(f"bad site index in {line!r}", path=path, line=ln,
                              code="bad-cell") from exc
        re_v = _parse_float(cells[2], path, ln)
        im_v = _parse_float(cells[3], path, ln)
        if (i, j) in entries:
            raise FormatError(f"duplicate entry for ({i},{j})", path=path, line=ln,
                              code="bad-cell")
        entries[(i, j)] = complex(re_v, im_v)
        max_site = max(max_site, i, j)
    M = max_site + 1
    G = np.zeros((M, M), dtype=complex)
    for i in range(M):
        for j in range(M):
            if (i, j) not in entries:
                raise FormatError(f"missing entry for ({i},{j})", path=path,
                                  code="missing-field")
            G[i, j] = entries[(i, j)]
    if np.max(np.abs(G - G.conj().T)) > 1e-9 * max(1.0, float(np.max(np.abs(G)))):
        raise ValidationError(f"{path}: one-body matrix is not Hermitian")
    return G


# ---------------------------------------------------------------------------
# Sweep tables, JSON companions
# ---------------------------------------------------------------------------

def save_sweep_csv(param: str, values, Es, masks, path: str | Path, *, comments=()) -> None:
    lines = [_header_line(comments), f"{param},E,mask"]
    for v, e, m in zip(values, Es, masks):
        e_cell = fmt_float(e) if m == MASK_OK else ""
        lines.append(f"{fmt_float(v)},{e_cell},{m}")
    write_text_atomic(path, "\n".join(lines) + "\n")


def load_lattice(path: str | Path) -> Lattice:
    return build_lattice(lattice_spec_from_json(Path(path).read_text(), path=str(path)))


def save_lattice(spec: LatticeSpec, path: str | Path) -> None:
    write_text_atomic(path, lattice_to_json(spec))


def load_calibration(path: str | Path) -> TofCalibration:
    return calibration_from_json(Path(path).read_text(), path=str(path))


def save_calibration(calib: TofCalibration, path: str | Path) -> None:
    write_text_atomic(path, calibration_to_json(calib))
