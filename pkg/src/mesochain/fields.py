"""Field containers: mesh-sampled mesoscale fields and uniform fine-grid fields."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .windows import MesoMesh

MESOFIELD_COLUMNS = ("beta", "x_beta", "value", "boundary_affected")
FINEFIELD_COLUMNS = ("i", "x_i", "value")

QUANTITIES = (
    "density", "momentum", "velocity", "stress-conv", "stress-int", "jacobian",
)


@dataclass
class MesoField:
    """Values of one quantity at the mesoscale mesh nodes."""

    mesh: MesoMesh
    values: np.ndarray
    quantity: str
    boundary_affected: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.quantity not in QUANTITIES:
            raise ValueError(f"unknown quantity tag {self.quantity!r}")
        if self.values.shape != (self.mesh.b,):
            raise ValueError(
                f"expected {self.mesh.b} node values, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{self.quantity} field has non-finite values")
        if self.quantity == "density" and np.any(self.values < 0.0):
            raise ValueError("density field must be nonnegative")
        if self.boundary_affected is None:
            self.boundary_affected = np.zeros(self.mesh.b, dtype=bool)
        else:
            self.boundary_affected = np.asarray(self.boundary_affected, dtype=bool)

    @property
    def x(self) -> np.ndarray:
        return self.mesh.centers

    def interior_mask(self) -> np.ndarray:
        return ~self.boundary_affected

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(MESOFIELD_COLUMNS)
            x = self.x
            for i in range(self.mesh.b):
                writer.writerow([
                    i + 1,
                    format(x[i], ".17g"),
                    format(self.values[i], ".17g"),
                    int(self.boundary_affected[i]),
                ])


def read_meso_csv(path, mesh: MesoMesh, quantity: str) -> MesoField:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != MESOFIELD_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        rows = list(reader)
    values = np.array([float(r[2]) for r in rows])
    flags = np.array([bool(int(r[3])) for r in rows])
    return MesoField(mesh, values, quantity, flags)


@dataclass
class FineField:
    """Uniform samples on (0, L) at midpoints x_i = (i - 1/2) L / g."""

    g: int
    l: float
    values: np.ndarray

    def __post_init__(self):
        if self.g < 2:
            raise ValueError("fine grid needs at least two samples")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.g,):
            raise ValueError(f"expected {self.g} samples, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("fine field has non-finite values")

    @property
    def dx(self) -> float:
        return self.l / self.g

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.g) + 0.5) * self.dx

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(FINEFIELD_COLUMNS)
            x = self.x
            for i in range(self.g):
                writer.writerow([i + 1, format(x[i], ".17g"),
                                 format(self.values[i], ".17g")])

    def sample_at(self, points) -> np.ndarray:
        """Piecewise-linear interpolation with constant extension at the walls."""
        return np.interp(np.asarray(points, dtype=float), self.x, self.values)


def meso_to_fine(fld: MesoField, g: int) -> FineField:
    """Interpolate mesh node values to the fine grid.

    Piecewise linear through the node values, extended by constants between
    the outermost nodes and the walls.  The fine grid must be at least as
    fine as the mesh (g >= b).
    """
    if g < fld.mesh.b:
        raise ValueError(f"fine grid g={g} coarser than the mesh b={fld.mesh.b}")
    fine_x = (np.arange(g) + 0.5) * (fld.mesh.l / g)
    vals = np.interp(fine_x, fld.x, fld.values)
    return FineField(g, fld.mesh.l, vals)


def fine_default_size(n_particles: int, cap: int = 4096) -> int:
    return min(n_particles, cap)
