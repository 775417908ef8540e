"""
The module defines the eight procedural glyph stencils used by the rotated-glyph generator. Each stencil is drawn
on a square canvas in normalized coordinates (u to the right, v downward, both in [-1, 1]).
"""

from typing import Callable, Dict, List, Tuple

import numpy as np

STROKE_HALF_WIDTH = 0.13

Segment = Tuple[Tuple[float, float], Tuple[float, float]]


def _grid(image_size: int) -> Tuple[np.ndarray, np.ndarray]:
    coords = (np.arange(image_size, dtype=np.float64) + 0.5) / image_size * 2.0 - 1.0
    v, u = np.meshgrid(coords, coords, indexing="ij")
    return u, v


def _segment_distance(u: np.ndarray, v: np.ndarray, segment: Segment) -> np.ndarray:
    (u0, v0), (u1, v1) = segment
    du, dv = u1 - u0, v1 - v0
    t = ((u - u0) * du + (v - v0) * dv) / (du * du + dv * dv)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(u - (u0 + t * du), v - (v0 + t * dv))


def _strokes(segments: List[Segment]) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    def draw(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        distance = np.min([_segment_distance(u, v, s) for s in segments], axis=0)
        return distance <= STROKE_HALF_WIDTH

    return draw


def _notched_disk(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    radius = np.hypot(u, v)
    notch = (u > 0.0) & (np.abs(v) < 0.18)
    return (radius <= 0.6) & ~notch


GLYPHS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "vertical_bar": _strokes([((0.0, -0.65), (0.0, 0.65))]),
    "tee": _strokes([((-0.55, -0.55), (0.55, -0.55)), ((0.0, -0.55), (0.0, 0.65))]),
    "cross": _strokes([((0.0, -0.6), (0.0, 0.6)), ((-0.6, 0.0), (0.6, 0.0))]),
    "l_corner": _strokes([((-0.4, -0.6), (-0.4, 0.55)), ((-0.4, 0.55), (0.5, 0.55))]),
    "hollow_square": _strokes(
        [
            ((-0.5, -0.5), (0.5, -0.5)),
            ((0.5, -0.5), (0.5, 0.5)),
            ((0.5, 0.5), (-0.5, 0.5)),
            ((-0.5, 0.5), (-0.5, -0.5)),
        ]
    ),
    "diagonal_stroke": _strokes([((-0.5, -0.5), (0.5, 0.5))]),
    "triangle_outline": _strokes(
        [
            ((0.0, -0.6), (0.6, 0.5)),
            ((0.6, 0.5), (-0.6, 0.5)),
            ((-0.6, 0.5), (0.0, -0.6)),
        ]
    ),
    "notched_disk": _notched_disk,
}

GLYPH_NAMES = tuple(GLYPHS)


def render_glyph(index: int, image_size: int) -> np.ndarray:
    """
    Renders one stencil as a binary image.

    Args:
        index (int): The stencil index in [0, 8).
        image_size (int): The canvas side length in pixels.

    Returns:
        np.ndarray: A float64 image of shape (image_size, image_size) with values in {0, 1}.
    """
    u, v = _grid(image_size)
    return GLYPHS[GLYPH_NAMES[index]](u, v).astype(np.float64)
