"""Time-sampled control fields shared by the geodesic and simulator layers."""

from dataclasses import dataclass

import numpy as np

__all__ = ["ControlField"]


@dataclass(frozen=True)
class ControlField:
    """Cartesian control components on a uniform time grid (hbar = 1).

    The control Hamiltonian at node i is
    wx[i] sigma_x + wy[i] sigma_y + wz[i] sigma_z.
    """

    grid: np.ndarray
    wx: np.ndarray
    wy: np.ndarray
    wz: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        comps = []
        for name in ("wx", "wy", "wz"):
            c = np.asarray(getattr(self, name), dtype=float)
            if c.shape != g.shape:
                raise ValueError(f"{name} does not match the grid shape")
            comps.append(c)
        if g.ndim != 1 or g.size < 2:
            raise ValueError("grid must be a 1-d array with >= 2 nodes")
        steps = np.diff(g)
        if np.any(steps <= 0.0) or not np.allclose(
            steps, steps[0], rtol=1e-9, atol=1e-12
        ):
            raise ValueError("grid must be strictly increasing and uniform")
        object.__setattr__(self, "grid", g)
        for name, c in zip(("wx", "wy", "wz"), comps):
            object.__setattr__(self, name, c)

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def n_steps(self) -> int:
        return self.grid.size - 1

    @classmethod
    def zeros(cls, grid) -> "ControlField":
        grid = np.asarray(grid, dtype=float)
        z = np.zeros_like(grid)
        return cls(grid, z, z.copy(), z.copy())

    @classmethod
    def constant(
        cls, grid, wx: float = 0.0, wy: float = 0.0, wz: float = 0.0
    ) -> "ControlField":
        grid = np.asarray(grid, dtype=float)
        ones = np.ones_like(grid)
        return cls(grid, wx * ones, wy * ones, wz * ones)
