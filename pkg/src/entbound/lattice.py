"""Lattice geometry: site coordinates, neighbor pairs, and reciprocal-space grids.

Sites are ordered row-major lexicographically in their integer coordinates,
positions are ``spacing * coords``, and neighbor pairs are deduplicated
unordered pairs. Periodic boundaries require at least 3 sites along every
axis (2-site rings would double-count the single bond).
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from math import pi

import numpy as np

from .errors import FormatError, ValidationError

KIND_DIMS = {"chain": 1, "square": 2, "cubic": 3}
BOUNDARIES = ("open", "periodic")

LATTICE_FIELDS = ("kind", "dims", "spacing", "boundary")


@dataclass(frozen=True)
class LatticeSpec:
    """Declarative description of a finite Bravais lattice patch."""

    kind: str
    dims: tuple[int, ...]
    spacing: float = 1.0
    boundary: str = "open"

    def __post_init__(self):
        if self.kind not in KIND_DIMS:
            raise ValidationError(f"unknown lattice kind {self.kind!r}")
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) != KIND_DIMS[self.kind]:
            raise ValidationError(
                f"kind {self.kind!r} needs {KIND_DIMS[self.kind]} dims, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise ValidationError(f"dims must be positive, got {dims}")
        if not (float(self.spacing) > 0.0):
            raise ValidationError(f"spacing must be > 0, got {self.spacing}")
        object.__setattr__(self, "spacing", float(self.spacing))
        if self.boundary not in BOUNDARIES:
            raise ValidationError(f"boundary must be one of {BOUNDARIES}, got {self.boundary!r}")
        if self.boundary == "periodic" and any(d < 3 for d in dims):
            raise ValidationError(
                f"periodic boundary requires every dim >= 3, got {dims}")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "dims": list(self.dims),
                "spacing": self.spacing, "boundary": self.boundary}

    @classmethod
    def from_json_dict(cls, data: dict, *, path: str | None = None) -> "LatticeSpec":
        if not isinstance(data, dict):
            raise FormatError("lattice JSON must be an object", path=path, code="bad-header")
        unknown = set(data) - set(LATTICE_FIELDS)
        if unknown:
            raise FormatError(f"unknown lattice field(s) {sorted(unknown)}",
                              path=path, code="unknown-field")
        missing = set(LATTICE_FIELDS) - set(data)
        if missing:
            raise FormatError(f"missing lattice field(s) {sorted(missing)}",
                              path=path, code="missing-field")
        try:
            return cls(kind=data["kind"], dims=tuple(data["dims"]),
                       spacing=float(data["spacing"]), boundary=data["boundary"])
        except (TypeError, ValueError) as exc:
            raise FormatError(f"bad lattice field value: {exc}", path=path,
                              code="bad-cell") from exc


@dataclass(frozen=True, eq=False)
class Lattice:
    """Realized lattice: site list, positions, and unique neighbor pairs."""

    spec: LatticeSpec
    sites: tuple[tuple[int, ...], ...]
    positions: np.ndarray            # (M, ndim) float, row i = spacing * sites[i]
    neighbor_pairs: tuple[tuple[int, int], ...]
    site_index: dict = field(repr=False, default_factory=dict)

    @property
    def num_sites(self) -> int:
        return len(self.sites)

    @property
    def ndim(self) -> int:
        return self.spec.ndim

    @property
    def spacing(self) -> float:
        return self.spec.spacing


def build_lattice(spec: LatticeSpec) -> Lattice:
    """Construct sites, positions, and deduplicated nearest-neighbor pairs."""
    dims = spec.dims
    sites = tuple(itertools.product(*(range(d) for d in dims)))  # lexicographic
    index = {s: i for i, s in enumerate(sites)}
    pairs: set[tuple[int, int]] = set()
    periodic = spec.boundary == "periodic"
    for coords in sites:
        i = index[coords]
        for ax, extent in enumerate(dims):
            nxt = coords[ax] + 1
            if nxt >= extent:
                if not periodic or extent < 3:
                    continue
                nxt = 0
            nb = list(coords)
            nb[ax] = nxt
            j = index[tuple(nb)]
            if i != j:
                pairs.add((min(i, j), max(i, j)))
    positions = spec.spacing * np.asarray(sites, dtype=float).reshape(len(sites), len(dims))
    positions.setflags(write=False)
    return Lattice(spec=spec, sites=sites, positions=positions,
                   neighbor_pairs=tuple(sorted(pairs)), site_index=index)


@dataclass(frozen=True, eq=False)
class QGrid:
    """Cartesian grid of scattering vectors over the centered Brillouin-zone box."""

    axes: tuple[np.ndarray, ...]     # per-axis q values
    qs: np.ndarray                   # (n_points, ndim), row-major over axes
    shape: tuple[int, ...]

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def __len__(self) -> int:
        return self.qs.shape[0]


def q_grid(lattice: Lattice, resolution: int | tuple[int, ...]) -> QGrid:
    """Uniform per-axis grid over [-pi/a, pi/a] inclusive of both endpoints.

    q = 0 lies on the grid whenever every axis resolution is odd; callers that
    need the q = 0 saturation point should use odd resolutions (the CLI default).
    """
    d = lattice.ndim
    if isinstance(resolution, (int, np.integer)):
        res = (int(resolution),) * d
    else:
        res = tuple(int(r) for r in resolution)
    if len(res) != d:
        raise ValidationError(f"need {d} resolutions, got {len(res)}")
    if any(r < 2 for r in res):
        raise ValidationError(f"resolution must be >= 2 per axis, got {res}")
    edge = pi / lattice.spacing
    axes = tuple(np.linspace(-edge, edge, r) for r in res)
    mesh = np.meshgrid(*axes, indexing="ij")
    qs = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    qs.setflags(write=False)
    return QGrid(axes=axes, qs=qs, shape=res)


def lattice_to_json(spec: LatticeSpec) -> str:
    return json.dumps(spec.to_json_dict(), indent=2, sort_keys=True) + "\n"


def lattice_spec_from_json(text: str, *, path: str | None = None) -> LatticeSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}", path=path, line=exc.lineno,
                          code="bad-cell") from exc
    return LatticeSpec.from_json_dict(data, path=path)
