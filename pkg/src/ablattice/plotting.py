"""Report figures rendered to files next to the delimited output."""

from __future__ import annotations

from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fields import FieldConfig
from .lattice import Region


def plot_screen_intensity(
    intensity: np.ndarray,
    path: str,
    reference: Optional[np.ndarray] = None,
    title: str = "screen intensity",
) -> None:
    """Intensity profile across the screen row, optional zero-flux overlay."""
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(len(intensity))
    if reference is not None:
        ax.plot(x, reference, color="0.6", lw=1.0, label="flux = 0")
    ax.plot(x, intensity, color="C0", lw=1.2, label="pattern")
    ax.set_xlabel("screen site")
    ax.set_ylabel("time-integrated |psi|^2")
    ax.set_title(title)
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_shift_sweep(
    e_fluxes: Sequence[float],
    extracted: Sequence[float],
    predicted: Sequence[float],
    path: str,
) -> None:
    """Extracted vs predicted fringe shift across the flux sweep."""
    fig, ax = plt.subplots(figsize=(6, 5))
    order = np.argsort(e_fluxes)
    ef = np.asarray(e_fluxes)[order]
    ax.plot(ef, np.asarray(predicted)[order], "k--", lw=1.0, label="predicted (mod 2pi)")
    ax.plot(ef, np.asarray(extracted)[order], "o-", color="C1", label="extracted")
    ax.set_xlabel("dimensionless flux e*Phi")
    ax.set_ylabel("fringe shift [rad]")
    ax.set_title("interference shift vs solenoid flux")
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_region_map(
    c: FieldConfig,
    x_region: Region,
    y_region: Region,
    path: str,
    zero_sites: Sequence = (),
) -> None:
    """Map of the cover: X-only, Y-only, overlap, excised, and zero sites."""
    lat = c.lattice
    grid = np.zeros((lat.ny, lat.nx))
    for (ix, iy) in x_region.sites:
        grid[iy, ix] = 1.0
    for (ix, iy) in y_region.sites:
        grid[iy, ix] = 3.0 if grid[iy, ix] else 2.0
    grid[~c.mask] = 4.0
    fig, ax = plt.subplots(figsize=(6, 6))
    cmap = matplotlib.colors.ListedColormap(
        ["white", "#aec7e8", "#ffbb78", "#98df8a", "0.25"]
    )
    ax.imshow(grid, origin="lower", cmap=cmap, vmin=0, vmax=4, interpolation="nearest")
    if zero_sites:
        zx = [s[0] for s in zero_sites]
        zy = [s[1] for s in zero_sites]
        ax.scatter(zx, zy, marker="x", s=12, color="red", label="psi = 0")
        ax.legend(loc="upper right", frameon=False)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("cover: X (blue), Y (orange), overlap (green), excised (dark)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
