"""Figure rendering for the report path (opt-in via the CLI --plot flag).

CSV stays the primary output; these helpers draw the same data to PNG next to
it. Masked points are left blank.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bounds import BoundMap, MASK_OK  # noqa: E402

_SAVE_KW = dict(dpi=150, metadata={"Software": "entbound"})


def _grid_shape(coords: np.ndarray):
    xs = np.unique(coords[:, 0])
    ys = np.unique(coords[:, 1])
    if xs.size * ys.size != coords.shape[0]:
        return None
    return xs, ys


def plot_bound_map(bmap: BoundMap, path: str | Path, *, title: str | None = None) -> None:
    """Line plot (1D grids) or heat map (2D grids) of the bound E."""
    fig, ax = plt.subplots(figsize=(5.2, 3.9))
    label = "E(q)" if bmap.kind == "spin" else "E(x, y)"
    if bmap.coords.shape[1] == 1:
        x = bmap.coords[:, 0]
        ax.plot(x, np.where(bmap.ok, bmap.E, np.nan), "o-", ms=3, label=label)
        ax.plot(x, np.where(bmap.ok, bmap.raw, np.nan), ":", color="gray", label="raw")
        ax.axhline(0.0, color="k", lw=0.6)
        ax.set_xlabel(bmap.coord_names[0])
        ax.set_ylabel("bound")
        ax.legend(frameon=False)
    else:
        grid = _grid_shape(bmap.coords)
        vals = np.where(bmap.ok, bmap.E, np.nan)
        if grid is None:
            sc = ax.scatter(bmap.coords[:, 0], bmap.coords[:, 1], c=vals, s=18)
            fig.colorbar(sc, ax=ax, label=label)
        else:
            xs, ys = grid
            img = np.full((xs.size, ys.size), np.nan)
            ix = np.searchsorted(xs, bmap.coords[:, 0])
            iy = np.searchsorted(ys, bmap.coords[:, 1])
            img[ix, iy] = vals
            pm = ax.pcolormesh(xs, ys, img.T, shading="nearest")
            fig.colorbar(pm, ax=ax, label=label)
        ax.set_xlabel(bmap.coord_names[0])
        ax.set_ylabel(bmap.coord_names[1])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_profile(x: np.ndarray, y: np.ndarray, xlabel: str, ylabel: str,
                 path: str | Path, *, title: str | None = None) -> None:
    """Simple x-y curve (structure factors, sweeps)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.9))
    ax.plot(np.asarray(x, dtype=float), np.asarray(y, dtype=float), "o-", ms=3)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_surface(coords: np.ndarray, values: np.ndarray, names: tuple[str, str],
                 label: str, path: str | Path, *, title: str | None = None) -> None:
    """Heat map of scalar data over a rectangular 2D grid (falls back to scatter)."""
    fig, ax = plt.subplots(figsize=(5.2, 3.9))
    grid = _grid_shape(coords)
    if grid is None:
        sc = ax.scatter(coords[:, 0], coords[:, 1], c=values, s=18)
        fig.colorbar(sc, ax=ax, label=label)
    else:
        xs, ys = grid
        img = np.full((xs.size, ys.size), np.nan)
        ix = np.searchsorted(xs, coords[:, 0])
        iy = np.searchsorted(ys, coords[:, 1])
        img[ix, iy] = values
        pm = ax.pcolormesh(xs, ys, img.T, shading="nearest")
        fig.colorbar(pm, ax=ax, label=label)
    ax.set_xlabel(names[0])
    ax.set_ylabel(names[1])
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
