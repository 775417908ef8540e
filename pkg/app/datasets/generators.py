"""
This module contains the procedural generators for confounded data: two-factor Gaussian mixtures where the
interest factor and the confounding factor shift disjoint coordinate blocks, and rotated glyph images where the
glyph identity and the rotation angle play the two roles.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy import ndimage

from app.datasets.bundle import CONTINUOUS, DISCRETE, ConfoundLabels, DatasetBundle
from app.datasets.glyphs import GLYPH_NAMES, render_glyph
from app.utils.exceptions import InvalidArgumentError

MAX_GLYPHS = len(GLYPH_NAMES)
JITTER_PX = 2
PIXEL_NOISE = 0.05
MAX_CONTINUOUS_ANGLE = 60.0


def block_directions(count: int, block_size: int) -> np.ndarray:
    """
    Returns `count` fixed unit class directions inside a coordinate block.

    With at least two coordinates the directions are evenly spaced on the unit circle spanned by the block's first
    two coordinates. A one-coordinate block only holds the two unit directions -1 and +1, so it hosts at most two
    classes.

    Args:
        count (int): The number of classes.
        block_size (int): The number of coordinates in the block.

    Returns:
        np.ndarray: A (count, block_size) matrix of unit-norm rows.

    Raises:
        InvalidArgumentError: If a one-coordinate block is asked for more than two classes.
    """
    directions = np.zeros((count, block_size))
    if block_size >= 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        directions[:, 0] = np.cos(angles)
        directions[:, 1] = np.sin(angles)
    elif count > 2:
        raise InvalidArgumentError(
            f"a one-coordinate block has two unit directions, not {count}; raise dim to at least 4"
        )
    else:
        directions[:, 0] = [1.0] if count == 1 else [-1.0, 1.0]
    return directions


def generate_two_factor_gaussians(
    k_clusters: int,
    g_categories: int,
    n_per_cell: int,
    dim: int,
    interest_gap: float,
    confound_gap: float,
    noise_sigma: float,
    seed: int,
) -> DatasetBundle:
    """
    Generates Gaussian blobs shifted by an interest factor and a discrete confounding factor.

    Every sample is mu_interest(k) * interest_gap + mu_confound(g) * confound_gap + N(0, noise_sigma^2 I). The
    interest directions occupy the first ceil(dim / 2) coordinates, the confound directions the rest.

    Args:
        k_clusters (int): The number of interest classes K.
        g_categories (int): The number of confound classes G.
        n_per_cell (int): Samples per (interest, confound) cell.
        dim (int): The feature dimension D, at least 2.
        interest_gap (float): Scale of the interest shift.
        confound_gap (float): Scale of the confound shift.
        noise_sigma (float): Standard deviation of the isotropic noise.
        seed (int): Seed of the random stream.

    Returns:
        DatasetBundle: N = K * G * n_per_cell samples with y = k and c = g, ordered cell by cell.

    Raises:
        InvalidArgumentError: If an argument is out of range.
    """
    if dim < 2:
        raise InvalidArgumentError("dim must be at least 2 to host both coordinate blocks")
    if k_clusters < 1 or g_categories < 1 or n_per_cell < 1:
        raise InvalidArgumentError("k_clusters, g_categories and n_per_cell must be positive")
    if interest_gap < 0 or confound_gap < 0:
        raise InvalidArgumentError("gaps must be non-negative")
    if noise_sigma <= 0:
        raise InvalidArgumentError("noise_sigma must be positive")

    interest_size = math.ceil(dim / 2)
    interest = block_directions(k_clusters, interest_size)
    confound = block_directions(g_categories, dim - interest_size)

    rng = np.random.default_rng(seed)
    features, y, c = [], [], []
    for k in range(k_clusters):
        for g in range(g_categories):
            center = np.concatenate([interest[k] * interest_gap, confound[g] * confound_gap])
            features.append(center + noise_sigma * rng.standard_normal((n_per_cell, dim)))
            y.append(np.full(n_per_cell, k))
            c.append(np.full(n_per_cell, g))

    logging.info(
        "Generated two-factor gaussians: K=%d G=%d n_per_cell=%d dim=%d",
        k_clusters,
        g_categories,
        n_per_cell,
        dim,
    )
    return DatasetBundle(
        X=np.concatenate(features).astype(np.float32),
        y=np.concatenate(y),
        c=ConfoundLabels(DISCRETE, np.concatenate(c), g_categories=g_categories),
        k_clusters=k_clusters,
        provenance={
            "generator": "gaussians",
            "k_clusters": k_clusters,
            "g_categories": g_categories,
            "n_per_cell": n_per_cell,
            "dim": dim,
            "interest_gap": interest_gap,
            "confound_gap": confound_gap,
            "noise_sigma": noise_sigma,
            "seed": seed,
        },
    )


def _render_sample(
    stencil: np.ndarray,
    angle: float,
    rng: np.random.Generator,
    jitter_px: int,
    pixel_noise: float,
) -> np.ndarray:
    image = stencil
    if angle != 0.0:
        image = ndimage.rotate(stencil, angle, reshape=False, order=1, mode="constant", cval=0.0)
    if jitter_px > 0:
        shift = rng.integers(-jitter_px, jitter_px + 1, size=2)
        image = ndimage.shift(image, shift, order=0, mode="constant", cval=0.0)
    if pixel_noise > 0:
        image = image + pixel_noise * rng.standard_normal(image.shape)
    return np.clip(image, 0.0, 1.0).ravel()


def generate_rotated_glyphs(
    mode: str,
    g_glyphs: int,
    k_angles_or_glyph_clusters: Optional[int],
    n_per_cell: int,
    image_size: int = 28,
    seed: int = 0,
    jitter_px: int = JITTER_PX,
    pixel_noise: float = PIXEL_NOISE,
) -> DatasetBundle:
    """
    Generates glyph images rotated about the image center.

    In discrete mode the interest label is the rotation index over K evenly spaced angles {0, 360/K, ...} and the
    confound is the glyph identity. In continuous mode the interest label is the glyph identity and the confound is
    the angle, drawn uniformly from [0, 60] degrees and stored as angle / 60.

    Args:
        mode (str): 'discrete' or 'continuous'.
        g_glyphs (int): The number of glyph stencils used, at most 8.
        k_angles_or_glyph_clusters (Optional[int]): The number of angles K in discrete mode; in continuous mode it
            must be None or equal to g_glyphs.
        n_per_cell (int): Samples per (angle, glyph) cell in discrete mode, per glyph in continuous mode.
        image_size (int): The canvas side length, at least 16.
        seed (int): Seed of the random stream.
        jitter_px (int): Maximal translation, in pixels, applied independently on both axes.
        pixel_noise (float): Standard deviation of the additive pixel noise.

    Returns:
        DatasetBundle: Flattened images with pixels in [0, 1].

    Raises:
        InvalidArgumentError: If an argument is out of range.
    """
    if mode not in (DISCRETE, CONTINUOUS):
        raise InvalidArgumentError(f"unknown glyph mode '{mode}'")
    if g_glyphs < 1 or g_glyphs > MAX_GLYPHS:
        raise InvalidArgumentError(f"g_glyphs must lie in [1, {MAX_GLYPHS}]")
    if image_size < 16:
        raise InvalidArgumentError("image_size must be at least 16")
    if n_per_cell < 1:
        raise InvalidArgumentError("n_per_cell must be positive")

    rng = np.random.default_rng(seed)
    stencils = [render_glyph(g, image_size) for g in range(g_glyphs)]
    features, y, c = [], [], []

    if mode == DISCRETE:
        k_angles = k_angles_or_glyph_clusters
        if k_angles is None or k_angles < 1:
            raise InvalidArgumentError("discrete mode needs a positive number of angles")
        angles = [360.0 * k / k_angles for k in range(k_angles)]
        for k, angle in enumerate(angles):
            for g, stencil in enumerate(stencils):
                for _ in range(n_per_cell):
                    features.append(_render_sample(stencil, angle, rng, jitter_px, pixel_noise))
                    y.append(k)
                    c.append(g)
        confound = ConfoundLabels(DISCRETE, np.array(c), g_categories=g_glyphs)
        k_clusters = k_angles
    else:
        if k_angles_or_glyph_clusters not in (None, g_glyphs):
            raise InvalidArgumentError("continuous mode clusters glyphs: K must equal g_glyphs")
        for g, stencil in enumerate(stencils):
            for _ in range(n_per_cell):
                angle = rng.uniform(0.0, MAX_CONTINUOUS_ANGLE)
                features.append(_render_sample(stencil, angle, rng, jitter_px, pixel_noise))
                y.append(g)
                c.append(angle / MAX_CONTINUOUS_ANGLE)
        confound = ConfoundLabels(CONTINUOUS, np.clip(np.array(c), 0.0, 1.0))
        k_clusters = g_glyphs

    logging.info(
        "Generated %s rotated glyphs: G=%d K=%d N=%d size=%d",
        mode,
        g_glyphs,
        k_clusters,
        len(features),
        image_size,
    )
    return DatasetBundle(
        X=np.stack(features).astype(np.float32),
        y=np.array(y),
        c=confound,
        k_clusters=k_clusters,
        provenance={
            "generator": f"glyphs-{mode}",
            "g_glyphs": g_glyphs,
            "k_clusters": k_clusters,
            "n_per_cell": n_per_cell,
            "image_size": image_size,
            "jitter_px": jitter_px,
            "pixel_noise": pixel_noise,
            "seed": seed,
        },
    )
