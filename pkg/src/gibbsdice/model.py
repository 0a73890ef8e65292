"""Die geometry, state energies and the two face-probability models.

Face numbering for a cuboid with side lengths ``(s1, s2, s3)``::

    faces 3, 4  perpendicular to s1
    faces 1, 6  perpendicular to s2
    faces 2, 5  perpendicular to s3

A die is "in state i" when it rests with face i on top, so the centre of
gravity sits at half the side length perpendicular to face i.  Opposite faces
therefore always share an energy.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidGeometryError, InvalidParameterError

# index into (s1, s2, s3) of the side perpendicular to faces 1..6
FACE_AXIS = (1, 2, 0, 0, 2, 1)


class Normalization(enum.Enum):
    """How half-heights are made dimensionless.

    ``HALF_DIAGONAL`` divides by the distance from the centre of gravity to a
    corner, ``GEOMETRIC_MEAN`` by the cube root of the product of the three
    half-heights.  Both are invariant under uniform rescaling of the die.
    """

    HALF_DIAGONAL = "half-diagonal"
    GEOMETRIC_MEAN = "geometric-mean"

    @classmethod
    def parse(cls, value: "str | Normalization") -> "Normalization":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("_", "-"))
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise InvalidParameterError(
                f"unknown normalization {value!r}; expected one of {names}"
            ) from None


def _check_length(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise InvalidGeometryError(f"{name} must be positive and finite, got {value!r}")
    return value


@dataclass(frozen=True)
class CuboidSpec:
    """Homogeneous cuboid with side lengths ``s1, s2, s3`` (any length unit)."""

    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        for name in ("s1", "s2", "s3"):
            object.__setattr__(self, name, _check_length(name, getattr(self, name)))

    @classmethod
    def parse(cls, text: str) -> "CuboidSpec":
        """Parse ``"13x20x23"``."""
        parts = text.lower().replace("*", "x").split("x")
        if len(parts) != 3:
            raise InvalidGeometryError(f"expected AxBxC, got {text!r}")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError:
            raise InvalidGeometryError(f"expected AxBxC, got {text!r}") from None

    @property
    def sides(self) -> tuple[float, float, float]:
        return (self.s1, self.s2, self.s3)

    def half_heights(self) -> np.ndarray:
        """Centre-of-gravity height for each of the six states."""
        s = np.asarray(self.sides)
        return s[list(FACE_AXIS)] / 2.0

    def scaled(self, factor: float) -> "CuboidSpec":
        return CuboidSpec(self.s1 * factor, self.s2 * factor, self.s3 * factor)


@dataclass(frozen=True)
class GeneralDieSpec:
    """Arbitrary die given by per-state centre-of-gravity heights.

    ``scale`` is the explicit normalization length (for example the half
    diagonal).  No symmetry between opposite faces is assumed.
    """

    heights: tuple[float, ...]
    scale: float

    def __post_init__(self):
        heights = tuple(_check_length(f"h{i + 1}", h) for i, h in enumerate(self.heights))
        if len(heights) < 2:
            raise InvalidGeometryError("a die needs at least two resting states")
        object.__setattr__(self, "heights", heights)
        object.__setattr__(self, "scale", _check_length("scale", self.scale))

    @property
    def k(self) -> int:
        return len(self.heights)


def cuboid_energies(spec: CuboidSpec, norm: "Normalization | str") -> np.ndarray:
    """Dimensionless energies of the six states of a homogeneous cuboid."""
    norm = Normalization.parse(norm)
    h = np.asarray(spec.sides) / 2.0
    if norm is Normalization.HALF_DIAGONAL:
        divisor = math.sqrt(h[0] ** 2 + h[1] ** 2 + h[2] ** 2)
    else:
        divisor = math.prod(h) ** (1.0 / 3.0)
    return spec.half_heights() / divisor


def general_energies(spec: GeneralDieSpec) -> np.ndarray:
    return np.asarray(spec.heights, dtype=float) / spec.scale


def _check_energies(E) -> np.ndarray:
    E = np.asarray(E, dtype=float)
    if E.ndim != 1 or E.size < 2:
        raise InvalidGeometryError("need a 1-D vector of at least two energies")
    if not np.all(np.isfinite(E)) or np.any(E <= 0.0):
        raise InvalidGeometryError("energies must be positive and finite")
    return E


def check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or beta < 0.0:
        raise InvalidParameterError(f"beta must be finite and >= 0, got {beta!r}")
    return beta


def gibbs_probabilities(E: Sequence[float], beta: float) -> np.ndarray:
    """Gibbs distribution ``p_i = exp(-beta E_i) / Z(beta)``.

    The exponent is shifted by ``min(E)`` so large ``beta`` stays finite.
    """
    E = _check_energies(E)
    beta = check_beta(beta)
    w = np.exp(-beta * (E - E.min()))
    return w / w.sum()


def log_partition(E: Sequence[float], beta: float) -> float:
    """``ln Z(beta)`` evaluated without overflow."""
    E = np.asarray(E, dtype=float)
    e0 = E.min()
    return -beta * e0 + math.log(np.exp(-beta * (E - e0)).sum())


def xxy_energies(sx, sy, norm: "Normalization | str" = Normalization.GEOMETRIC_MEAN):
    """``(E_x, E_y)`` of an xxy-cuboid with sides ``(sx, sx, sy)``.

    ``E_x`` belongs to the four rectangular-face-up states, ``E_y`` to the two
    square-face-up states.  Vectorized over ``sx`` and ``sy``.
    """
    norm = Normalization.parse(norm)
    sx = np.asarray(sx, dtype=float)
    sy = np.asarray(sy, dtype=float)
    if np.any(~np.isfinite(sx)) or np.any(sx <= 0) or np.any(~np.isfinite(sy)) or np.any(sy <= 0):
        raise InvalidGeometryError("side lengths must be positive and finite")
    if norm is Normalization.GEOMETRIC_MEAN:
        g = np.cbrt(sx * sx * sy)
    else:
        g = np.sqrt(2.0 * sx * sx + sy * sy)
    return sx / g, sy / g


def _xx_share(gap):
    # 1 / (1 + 2 exp(-gap)) without overflow for large |gap|
    gap = np.asarray(gap, dtype=float)
    t = np.exp(-np.abs(gap))
    return np.where(gap >= 0, 1.0 / (1.0 + 2.0 * t), t / (t + 2.0))


def xxy_pxx(sx, sy, beta: float, norm: "Normalization | str" = Normalization.GEOMETRIC_MEAN):
    """Probability of the xx-state (a square face on top).

    Vectorized over ``sx`` and ``sy``; returns a float for scalar input.
    ``p_xy = 1 - p_xx``.
    """
    beta = check_beta(beta)
    ex, ey = xxy_energies(sx, sy, norm)
    p = _xx_share(beta * (ex - ey))
    return float(p) if p.ndim == 0 else p


def xxy_pxx_ratio(ratio, beta: float, norm: "Normalization | str" = Normalization.GEOMETRIC_MEAN):
    """``p_xx`` as a function of the side ratio ``s_y / s_x`` alone."""
    return xxy_pxx(1.0, ratio, beta, norm)


def rectangle_solid_angle(a: float, b: float, d: float) -> float:
    """Solid angle of a ``2a x 2b`` rectangle seen from distance ``d`` on its axis."""
    return 4.0 * math.atan(a * b / (d * math.sqrt(a * a + b * b + d * d)))


def face_solid_angles(spec: CuboidSpec) -> np.ndarray:
    """Solid angle subtended by each face from the cuboid centre."""
    h = [s / 2.0 for s in spec.sides]
    per_axis = []
    for axis in range(3):
        a, b = (h[i] for i in range(3) if i != axis)
        per_axis.append(rectangle_solid_angle(a, b, h[axis]))
    return np.asarray([per_axis[ax] for ax in FACE_AXIS])


def simpson_probabilities(spec: CuboidSpec) -> np.ndarray:
    """Baseline model: probability proportional to the face's solid angle."""
    return face_solid_angles(spec) / (4.0 * math.pi)
