"""Axis permutation carrying dephasing-optimal controls to amplitude damping.

The cyclic map x->z, y->x, z->y turns a sigma_z-coupled solution into a
sigma_x-coupled one; protecting a gate U under damping then reduces to
protecting the conjugated gate R^dag U R under dephasing and permuting
the resulting fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import SIGMA_X, SIGMA_Y, SIGMA_Z
from .fields import ControlField
from .noise import NoiseParams

__all__ = [
    "AxisMap",
    "RwaReport",
    "permute_fields",
    "correction_operator",
    "conjugate_target",
    "rwa_check",
]

RWA_BAND = (0.5, 2.0)


@dataclass(frozen=True)
class AxisMap:
    """The fixed cyclic permutation plus the qubit gap it trades on."""

    omega0: float

    def __post_init__(self):
        if not self.omega0 > 0.0:
            raise ValueError("omega0 must be positive")

    permutation = {"x": "z", "y": "x", "z": "y"}


def permute_fields(field: ControlField, omega0: float) -> ControlField:
    """f_x = w_z, f_y = w_x, f_z = w_y - omega0, pointwise."""
    return ControlField(
        grid=field.grid,
        wx=field.wz.copy(),
        wy=field.wx.copy(),
        wz=field.wy - omega0,
    )


def correction_operator() -> np.ndarray:
    """U_cor with U_cor^dag (X, Y, Z) U_cor = (Z, X, Y)."""
    c1 = (-SIGMA_X + SIGMA_Z) / math.sqrt(2.0)
    c2 = (SIGMA_Y - SIGMA_Z) / math.sqrt(2.0)
    return c2 @ c1


def conjugate_target(u: np.ndarray, r: np.ndarray | None = None) -> np.ndarray:
    """R^dag U R; with the default R = U_cor the Pauli coefficients of U
    cycle one axis backward, so solving the conjugate under dephasing and
    permuting fields yields U under damping."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError("target must be 2x2")
    r = correction_operator() if r is None else np.asarray(r, dtype=complex)
    return r.conj().T @ u @ r


@dataclass(frozen=True)
class RwaReport:
    ratio: float
    valid: bool
    message: str


def rwa_check(omega0: float, p: NoiseParams) -> RwaReport:
    """Rotating-wave validity: omega0 near the bath cutoff."""
    if omega0 <= 0.0:
        return RwaReport(ratio=0.0, valid=False, message="omega0 must be positive")
    ratio = omega0 / p.omega_c
    lo, hi = RWA_BAND
    if lo <= ratio <= hi:
        return RwaReport(ratio=ratio, valid=True, message="ok")
    return RwaReport(
        ratio=ratio,
        valid=False,
        message=(
            f"omega0/omega_c = {ratio:.3g} outside [{lo}, {hi}]: counter-rotating"
            " terms are not negligible, protection transfer is unreliable"
        ),
    )
