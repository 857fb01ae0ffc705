"""Input validation helpers shared across the package surface.

These are small checks used at API boundaries (estimators, CLI, server) so
that malformed inputs fail with a named error instead of a numpy traceback.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .color import ColorLuv, ColorRgb, rgb_to_cieluv


class DataError(ValueError):
    """Malformed input data (files, records, payloads)."""


class NumericalError(RuntimeError):
    """A computation produced a non-finite or inconsistent result."""


def parse_color(value: Any) -> tuple[ColorLuv, ColorRgb | None]:
    """Parse one of the accepted color forms into CIELUV.

    Accepts ``"#rrggbb"`` strings, ``[r, g, b]`` integer triples, and
    ``{"luv": [l, u, v]}`` dicts. Returns the CIELUV color and, when the
    input was RGB-based, the source RGB (kept for lossless serialization).
    """
    if isinstance(value, str):
        rgb = ColorRgb.from_hex(value)
        return rgb_to_cieluv(rgb), rgb
    if isinstance(value, (list, tuple)) and len(value) == 3:
        rgb = ColorRgb(int(value[0]), int(value[1]), int(value[2]))
        return rgb_to_cieluv(rgb), rgb
    if isinstance(value, dict) and "luv" in value:
        luv = value["luv"]
        if not isinstance(luv, (list, tuple)) or len(luv) != 3:
            raise DataError(f"luv color must have 3 components, got {value!r}")
        return ColorLuv(float(luv[0]), float(luv[1]), float(luv[2])), None
    raise DataError(f"unrecognized color form: {value!r}")


def check_context(ctx: Sequence[ColorLuv]) -> tuple[ColorLuv, ColorLuv, ColorLuv]:
    if len(ctx) != 3:
        raise DataError(f"context must contain exactly 3 colors, got {len(ctx)}")
    for c in ctx:
        if not isinstance(c, ColorLuv):
            raise DataError(f"context entries must be ColorLuv, got {type(c).__name__}")
    return (ctx[0], ctx[1], ctx[2])


def check_row_stochastic(mat: np.ndarray, name: str = "matrix", atol: float = 1e-12) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2:
        raise DataError(f"{name} must be 2-dimensional, got shape {mat.shape}")
    if np.any(mat < 0):
        raise DataError(f"{name} has negative entries")
    sums = mat.sum(axis=1)
    if not np.allclose(sums, 1.0, rtol=0.0, atol=atol):
        worst = float(np.abs(sums - 1.0).max())
        raise DataError(f"{name} rows must sum to 1 (worst deviation {worst:.3e})")
    return mat


def check_finite(arr: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"non-finite values in {name}")
    return arr


def check_probability_vector(vec: np.ndarray, name: str = "prior", atol: float = 1e-12) -> np.ndarray:
    vec = np.asarray(vec, dtype=float)
    if vec.ndim != 1:
        raise DataError(f"{name} must be 1-dimensional")
    if np.any(vec < 0) or abs(float(vec.sum()) - 1.0) > atol:
        raise DataError(f"{name} must be a probability vector")
    return vec
