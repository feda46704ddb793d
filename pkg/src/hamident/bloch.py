"""Two-level kinematics: rotation axes, Bloch-vector precession, axis coordinates.

Vectors are plain ``numpy`` arrays of shape ``(3,)``. A Hamiltonian
``2H = d_x X + d_y Y + d_z Z`` rotates the Bloch vector about ``d`` at angular
frequency ``|d|`` with the right-hand sense, ``ds/dt = d x s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidAxisError, UnknownChannelError

POLE = np.array([0.0, 0.0, 1.0])


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite vector {arr}")
    return arr


def _unit_axis(axis) -> tuple[np.ndarray, float]:
    axis = as_vector(axis)
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        raise InvalidAxisError("rotation axis must be nonzero")
    return axis / norm, norm


def rotate(v, axis, angle: float) -> np.ndarray:
    """Rotate ``v`` by ``angle`` radians about ``axis`` (Rodrigues formula)."""
    v = as_vector(v)
    n, _ = _unit_axis(axis)
    c, s = np.cos(angle), np.sin(angle)
    return v * c + np.cross(n, v) * s + n * np.dot(n, v) * (1.0 - c)


def evolve_z(s0, d, t):
    """z-component of ``s0`` after precessing about ``d`` for time ``t``.

    ``t`` may be an array; the result then has the same shape.
    """
    s0 = as_vector(s0)
    if abs(np.linalg.norm(s0) - 1.0) > 1e-9:
        raise ValueError("initial Bloch vector must be a unit vector")
    n, omega = _unit_axis(d)
    alpha = omega * np.asarray(t, dtype=float)
    cross_z = n[0] * s0[1] - n[1] * s0[0]
    z = s0[2] * np.cos(alpha) + cross_z * np.sin(alpha) + n[2] * np.dot(n, s0) * (1.0 - np.cos(alpha))
    return float(z) if z.ndim == 0 else z


@dataclass(frozen=True)
class AxisSpherical:
    """Rotation frequency ``omega`` with declination ``theta`` and azimuth ``phi``."""

    omega: float
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (self.omega >= 0 and 0 <= self.theta <= np.pi and -np.pi < self.phi <= np.pi):
            raise ValueError(f"axis out of range: {self}")


def wrap_angle(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    a = float(np.mod(a + np.pi, 2 * np.pi) - np.pi)
    return np.pi if a == -np.pi else a


def spherical_from_cartesian(d) -> AxisSpherical:
    d = as_vector(d)
    omega = float(np.linalg.norm(d))
    if omega == 0.0:
        raise InvalidAxisError("zero vector has no direction")
    # atan2 form keeps full precision near the poles, unlike arccos(d_z / |d|)
    theta = float(np.arctan2(np.hypot(d[0], d[1]), d[2]))
    if d[0] == 0.0 and d[1] == 0.0:
        phi = 0.0
    else:
        phi = wrap_angle(np.arctan2(d[1], d[0]))
    return AxisSpherical(omega, theta, phi)


def cartesian_from_spherical(a: AxisSpherical) -> np.ndarray:
    st = np.sin(a.theta)
    return a.omega * np.array([st * np.cos(a.phi), st * np.sin(a.phi), np.cos(a.theta)])


@dataclass
class HamiltonianModel:
    """Internal vector ``d0`` plus one interaction vector per control channel.

    Channels are numbered from 1; channel 0 denotes free evolution.
    """

    d0: np.ndarray
    controls: Sequence[np.ndarray] = field(default_factory=tuple)

    def __post_init__(self):
        self.d0 = as_vector(self.d0)
        self.controls = tuple(as_vector(d) for d in self.controls)

    @property
    def n_channels(self) -> int:
        return len(self.controls)

    def control(self, m: int) -> np.ndarray:
        if not 1 <= m <= self.n_channels:
            raise UnknownChannelError(f"channel {m} not in 1..{self.n_channels}")
        return self.controls[m - 1]

    def rotated_about_z(self, chi: float) -> "HamiltonianModel":
        r = lambda v: rotate(v, POLE, chi)
        return HamiltonianModel(r(self.d0), [r(d) for d in self.controls])

    def to_dict(self) -> dict:
        return {"d0": self.d0.tolist(), "controls": [d.tolist() for d in self.controls]}

    @classmethod
    def from_dict(cls, data: dict) -> "HamiltonianModel":
        return cls(data["d0"], data.get("controls", []))


def effective_axis(model: HamiltonianModel, m: int, f: float) -> np.ndarray:
    """Axis ``d0 + f * d_m`` for control channel ``m`` held at amplitude ``f``.

    ``m = 0`` is accepted for free evolution and returns ``d0``.
    """
    if m == 0:
        return model.d0.copy()
    dm = model.control(m)
    if f == 0:
        return model.d0.copy()
    return model.d0 + f * dm
