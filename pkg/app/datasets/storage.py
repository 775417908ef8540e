"""
This module persists dataset bundles as a directory of little-endian binary arrays plus a JSON header:

    meta.json    n, d_input, k_clusters, confound_kind, g_categories, dtype, layout, format_version
    X.bin        N * D f32le, row-major
    y.bin        N u32le (optional)
    c.bin        N u32le (discrete) or N f32le (continuous)
    c_mask.bin   N bytes, 1 = observed (optional)
"""

import logging
import os

import numpy as np

from app.datasets.bundle import CONFOUND_KINDS, DISCRETE, ConfoundLabels, DatasetBundle
from app.utils.exceptions import FormatError, InvalidArgumentError
from app.utils.helper import read_array, read_json, write_array, write_json

FORMAT_VERSION = 1
META_FILE = "meta.json"
X_FILE = "X.bin"
Y_FILE = "y.bin"
C_FILE = "c.bin"
MASK_FILE = "c_mask.bin"
REQUIRED_KEYS = (
    "n",
    "d_input",
    "k_clusters",
    "confound_kind",
    "g_categories",
    "dtype",
    "layout",
    "format_version",
)


def save_bundle(bundle: DatasetBundle, directory: str) -> None:
    """
    Writes a bundle into a directory, creating it if needed. Stale optional files are removed.

    Args:
        bundle (DatasetBundle): The bundle to persist.
        directory (str): The target directory.
    """
    os.makedirs(directory, exist_ok=True)
    meta = {
        "n": bundle.n,
        "d_input": bundle.d_input,
        "k_clusters": bundle.k_clusters,
        "confound_kind": bundle.c.kind,
        "g_categories": bundle.c.g_categories,
        "dtype": "f32le",
        "layout": "row-major",
        "format_version": FORMAT_VERSION,
        "provenance": bundle.provenance,
    }
    write_json(os.path.join(directory, META_FILE), meta)
    write_array(os.path.join(directory, X_FILE), bundle.X, "<f4")
    write_array(
        os.path.join(directory, C_FILE),
        bundle.c.values,
        "<u4" if bundle.c.is_discrete else "<f4",
    )
    for name, values, dtype in (
        (Y_FILE, bundle.y, "<u4"),
        (MASK_FILE, bundle.c.mask, "u1"),
    ):
        path = os.path.join(directory, name)
        if values is None:
            if os.path.exists(path):
                os.remove(path)
        else:
            write_array(path, values, dtype)
    logging.info("Saved dataset (N=%d, D=%d) to %s", bundle.n, bundle.d_input, directory)


def _read_meta(directory: str) -> dict:
    path = os.path.join(directory, META_FILE)
    if not os.path.exists(path):
        raise FormatError(path, "file not found")
    meta = read_json(path)
    if not isinstance(meta, dict):
        raise FormatError(path, "header must be a JSON object")
    for key in REQUIRED_KEYS:
        if key not in meta:
            raise FormatError(path, f"missing key '{key}'")
    if meta["dtype"] != "f32le":
        raise FormatError(path, f"unknown dtype '{meta['dtype']}'")
    if meta["layout"] != "row-major":
        raise FormatError(path, f"unknown layout '{meta['layout']}'")
    if meta["format_version"] != FORMAT_VERSION:
        raise FormatError(path, f"unsupported format_version {meta['format_version']}")
    if meta["confound_kind"] not in CONFOUND_KINDS:
        raise FormatError(path, f"unknown confound_kind '{meta['confound_kind']}'")
    for key in ("n", "d_input", "k_clusters"):
        if not isinstance(meta[key], int) or meta[key] < 1:
            raise FormatError(path, f"'{key}' must be a positive integer")
    return meta


def load_bundle(directory: str) -> DatasetBundle:
    """
    Reads a bundle written by `save_bundle`.

    Args:
        directory (str): The dataset directory.

    Returns:
        DatasetBundle: The bundle, bit-identical to the one saved.

    Raises:
        FormatError: If a file is missing, malformed or disagrees with the declared shape.
    """
    meta = _read_meta(directory)
    n, d = meta["n"], meta["d_input"]

    x_path = os.path.join(directory, X_FILE)
    c_path = os.path.join(directory, C_FILE)
    for path in (x_path, c_path):
        if not os.path.exists(path):
            raise FormatError(path, "file not found")
    X = read_array(x_path, "<f4", n * d).reshape(n, d)
    discrete = meta["confound_kind"] == DISCRETE
    c_values = read_array(c_path, "<u4" if discrete else "<f4", n)

    y_path = os.path.join(directory, Y_FILE)
    y = read_array(y_path, "<u4", n) if os.path.exists(y_path) else None
    mask_path = os.path.join(directory, MASK_FILE)
    mask = None
    if os.path.exists(mask_path):
        mask = read_array(mask_path, "u1", n).astype(bool)

    try:
        confound = ConfoundLabels(
            meta["confound_kind"],
            c_values,
            g_categories=meta["g_categories"] if discrete else None,
            mask=mask,
        )
        return DatasetBundle(
            X=X,
            y=y,
            c=confound,
            k_clusters=meta["k_clusters"],
            provenance=meta.get("provenance", {}),
        )
    except InvalidArgumentError as e:
        raise FormatError(os.path.join(directory, META_FILE), e.message) from e
