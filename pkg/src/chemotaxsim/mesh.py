"""Uniform cell-centered grids with Neumann (mirror ghost) closure.

The grid covers an axis-aligned box in 1 or 2 dimensions.  Cell values are
stored row-major over the axes (C order), so ``values.ravel()`` is the
documented linear cell index: in 2D, cell (i, j) sits at index ``i*ny + j``.
Faces on the domain boundary always carry zero gradient / zero flux, which is
the discrete form of a homogeneous Neumann condition with mirrored ghost
cells.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import CorruptFieldError, ParameterError


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered rectangular mesh.

    extents: physical length per axis.
    cells:   number of cells per axis (>= 2 each).

    spacing is derived as extent/cells; with power-of-two cell counts the
    identity spacing*cells == extent is exact in binary arithmetic.
    """

    extents: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        extents = tuple(float(e) for e in self.extents)
        cells = tuple(int(n) for n in self.cells)
        object.__setattr__(self, "extents", extents)
        object.__setattr__(self, "cells", cells)
        if len(extents) != len(cells):
            raise ParameterError("extents and cells must have the same length")
        if len(extents) not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {len(extents)}")
        if any(n < 2 for n in cells):
            raise ParameterError(f"need at least 2 cells per axis, got {cells}")
        if any(not np.isfinite(e) or e <= 0 for e in extents):
            raise ParameterError(f"extents must be positive and finite, got {extents}")

    @classmethod
    def line(cls, length: float, n: int) -> "Grid":
        return cls((length,), (n,))

    @classmethod
    def box(cls, lx: float, ly: float, nx: int, ny: int) -> "Grid":
        return cls((lx, ly), (nx, ny))

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @cached_property
    def num_cells(self) -> int:
        return int(np.prod(self.cells))

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple(e / n for e, n in zip(self.extents, self.cells))

    @cached_property
    def min_spacing(self) -> float:
        return min(self.spacing)

    @cached_property
    def measure(self) -> float:
        """|Omega|, the volume of the box."""
        return float(np.prod(self.extents))

    @cached_property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        """Cell-center coordinates along one axis."""
        h = self.spacing[axis]
        return (np.arange(self.cells[axis]) + 0.5) * h

    def coordinate_fields(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays broadcast to the full cell shape."""
        axes = [self.centers(ax) for ax in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def face_shape(self, axis: int) -> tuple[int, ...]:
        s = list(self.cells)
        s[axis] += 1
        return tuple(s)


@dataclass(eq=False)
class ScalarField:
    """One real value per cell of a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.grid.shape:
            raise ParameterError(
                f"field shape {vals.shape} does not match grid shape {self.grid.shape}"
            )
        self.values = vals

    @classmethod
    def full(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Sample ``fn(*coords)`` at cell centers."""
        return cls(grid, np.asarray(fn(*grid.coordinate_fields()), dtype=np.float64))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    def min(self) -> float:
        return float(self.values.min())

    def max(self) -> float:
        return float(self.values.max())


def require_finite(f: ScalarField, what: str = "field") -> None:
    if not np.isfinite(f.values).all():
        raise CorruptFieldError(f"{what} contains non-finite values")


def integrate(f: ScalarField) -> float:
    """Midpoint quadrature: sum of cell values times cell volume.

    Exact for cellwise-constant data and for fields linear in each
    coordinate (midpoint sampling).
    """
    require_finite(f)
    return float(f.values.sum() * f.grid.cell_volume)


def face_gradient(f: ScalarField) -> list[np.ndarray]:
    """Per-axis face-normal gradients; boundary faces are exactly zero.

    Interior face between neighbors gets (right - left)/h.  The mirror
    ghost convention makes every boundary face gradient vanish.
    """
    require_finite(f)
    grid = f.grid
    out = []
    for ax in range(grid.dim):
        g = np.zeros(grid.face_shape(ax))
        sl = [slice(None)] * grid.dim
        sl[ax] = slice(1, -1)
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        g[tuple(sl)] = (f.values[tuple(hi)] - f.values[tuple(lo)]) / grid.spacing[ax]
        out.append(g)
    return out


def cell_gradient_sq(f: ScalarField) -> ScalarField:
    """Cell-centered |grad f|^2.

    Per axis the two adjacent face gradients are averaged, squared and
    summed over axes.  Boundary cells see the zero boundary face from the
    mirrored ghost.
    """
    grid = f.grid
    total = np.zeros(grid.shape)
    for ax, g in enumerate(face_gradient(f)):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        avg = 0.5 * (g[tuple(lo)] + g[tuple(hi)])
        total += avg * avg
    return ScalarField(grid, total)


def divergence(grid: Grid, fluxes: list[np.ndarray]) -> np.ndarray:
    """Discrete divergence of per-axis face fluxes.

    With zero boundary faces the cell sum of the result telescopes to zero,
    which is what every conservation test in this package relies on.
    """
    div = np.zeros(grid.shape)
    for ax, flux in enumerate(fluxes):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        div += (flux[tuple(hi)] - flux[tuple(lo)]) / grid.spacing[ax]
    return div


# --- snapshot / CSV file formats ------------------------------------------

def write_snapshot(f: ScalarField, t: float, path) -> None:
    """Write a field snapshot: header ``dim nx [ny] Lx [Ly] t``, then cell
    values in row-major order, whitespace separated, full precision."""
    grid = f.grid
    head = [str(grid.dim)] + [str(n) for n in grid.cells]
    head += [f"{e:.17g}" for e in grid.extents] + [f"{t:.17g}"]
    lines = [" ".join(head)]
    lines += [f"{v:.17g}" for v in f.values.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[ScalarField, float]:
    tokens = Path(path).read_text().split()
    dim = int(tokens[0])
    cells = tuple(int(x) for x in tokens[1:1 + dim])
    extents = tuple(float(x) for x in tokens[1 + dim:1 + 2 * dim])
    t = float(tokens[1 + 2 * dim])
    vals = np.array([float(x) for x in tokens[2 + 2 * dim:]])
    grid = Grid(extents, cells)
    if vals.size != grid.num_cells:
        raise CorruptFieldError(f"snapshot has {vals.size} values, expected {grid.num_cells}")
    return ScalarField(grid, vals.reshape(grid.shape)), t


def export_csv(f: ScalarField, path) -> None:
    """Write cell coordinates and values as CSV (x[,y],value per row)."""
    grid = f.grid
    coords = grid.coordinate_fields()
    cols = [c.ravel() for c in coords] + [f.values.ravel()]
    header = ",".join(["x", "y"][: grid.dim] + ["value"])
    rows = [header]
    for vals in zip(*cols):
        rows.append(",".join(f"{v:.17g}" for v in vals))
    Path(path).write_text("\n".join(rows) + "\n")
