"""Color handling in CIELUV: sRGB conversion, perceptual distance, context difficulty.

All model mathematics runs on CIELUV coordinates (D65 white point, 2 degree
observer). Context difficulty is classified from the two target-distractor
distances only; the distractor-distractor distance is ignored.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

DEFAULT_CONDITION_THRESHOLD = 20.0

# sRGB -> XYZ matrix, D65 (IEC 61966-2-1).
_M = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
# White point taken as the matrix image of linear (1,1,1) so that pure white
# lands on L*=100 with exactly zero chroma.
_XN = sum(_M[0])
_YN = sum(_M[1])
_ZN = sum(_M[2])
_DN = _XN + 15.0 * _YN + 3.0 * _ZN
_UN_PRIME = 4.0 * _XN / _DN
_VN_PRIME = 9.0 * _YN / _DN
_EPS = (6.0 / 29.0) ** 3
_KAPPA = (29.0 / 3.0) ** 3


class Condition(enum.Enum):
    """Context difficulty: how many distractors sit near the target."""

    FAR = "far"
    SPLIT = "split"
    CLOSE = "close"


@dataclass(frozen=True)
class ColorRgb:
    """8-bit sRGB color."""

    r: int
    g: int
    b: int

    def __post_init__(self):
        for name in ("r", "g", "b"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v <= 255:
                raise ValueError(f"rgb channel {name}={v!r} outside 0..255")

    @classmethod
    def from_hex(cls, text: str) -> "ColorRgb":
        s = text.strip().lstrip("#")
        if len(s) != 6:
            raise ValueError(f"hex color {text!r} must have 6 digits")
        try:
            return cls(int(s[0:2], 16), int(s[2:4], 16), int(s[4:6], 16))
        except ValueError as exc:
            raise ValueError(f"invalid hex color {text!r}") from exc

    def to_hex(self) -> str:
        return f"#{self.r:02x}{self.g:02x}{self.b:02x}"


@dataclass(frozen=True)
class ColorLuv:
    """A color in CIELUV (L*, u*, v*)."""

    l_star: float
    u_star: float
    v_star: float

    def __post_init__(self):
        if not (math.isfinite(self.l_star) and math.isfinite(self.u_star) and math.isfinite(self.v_star)):
            raise ValueError("CIELUV components must be finite")
        if not 0.0 <= self.l_star <= 100.0:
            raise ValueError(f"L*={self.l_star} outside [0, 100]")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.l_star, self.u_star, self.v_star)


def _linearize(channel: int) -> float:
    c = channel / 255.0
    return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4


def rgb_to_cieluv(c: ColorRgb) -> ColorLuv:
    """Convert an 8-bit sRGB color to CIELUV (gamma decoded, D65)."""
    rl, gl, bl = _linearize(c.r), _linearize(c.g), _linearize(c.b)
    x = _M[0][0] * rl + _M[0][1] * gl + _M[0][2] * bl
    y = _M[1][0] * rl + _M[1][1] * gl + _M[1][2] * bl
    z = _M[2][0] * rl + _M[2][1] * gl + _M[2][2] * bl

    yr = y / _YN
    l_star = 116.0 * yr ** (1.0 / 3.0) - 16.0 if yr > _EPS else _KAPPA * yr

    denom = x + 15.0 * y + 3.0 * z
    if denom == 0.0:
        # black: chromaticity defined as the white point so chroma is (0, 0)
        return ColorLuv(l_star, 0.0, 0.0)
    u_prime = 4.0 * x / denom
    v_prime = 9.0 * y / denom
    u_star = 13.0 * l_star * (u_prime - _UN_PRIME)
    v_star = 13.0 * l_star * (v_prime - _VN_PRIME)
    return ColorLuv(l_star, u_star, v_star)


def luv_distance(a: ColorLuv, b: ColorLuv) -> float:
    """Euclidean distance in (L*, u*, v*)."""
    return math.sqrt(
        (a.l_star - b.l_star) ** 2 + (a.u_star - b.u_star) ** 2 + (a.v_star - b.v_star) ** 2
    )


def classify_condition(
    ctx: tuple[ColorLuv, ColorLuv, ColorLuv],
    target_index: int,
    threshold: float = DEFAULT_CONDITION_THRESHOLD,
) -> Condition:
    """Classify a three-color context by how many distractors are within
    ``threshold`` CIELUV units of the target: 0 far, 1 split, 2 close."""
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    if target_index not in (0, 1, 2):
        raise ValueError(f"target_index must be 0..2, got {target_index}")
    target = ctx[target_index]
    near = sum(
        1
        for i, color in enumerate(ctx)
        if i != target_index and luv_distance(target, color) <= threshold
    )
    return {0: Condition.FAR, 1: Condition.SPLIT, 2: Condition.CLOSE}[near]
