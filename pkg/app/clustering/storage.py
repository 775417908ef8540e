"""
The module reads and writes the clustering artifacts of a run:

    centroids.bin     8-byte header (K, d as u32le), then K * d f32le row-major
    assignments.bin   N u32le cluster indices
"""

import os
from typing import Optional

import numpy as np

from app.utils.exceptions import FormatError
from app.utils.helper import read_array, read_matrix, write_array, write_matrix

CENTROIDS_FILE = "centroids.bin"
ASSIGNMENTS_FILE = "assignments.bin"


def save_centroids(centroids: np.ndarray, path: str) -> None:
    write_matrix(path, np.asarray(centroids))


def load_centroids(path: str) -> np.ndarray:
    return read_matrix(path)


def save_assignments(labels: np.ndarray, path: str) -> None:
    write_array(path, np.asarray(labels), "<u4")


def load_assignments(path: str, n: Optional[int] = None) -> np.ndarray:
    """
    Reads cluster indices.

    Args:
        path (str): The assignments file.
        n (int, optional): The expected number of samples; inferred from the file size when omitted.

    Returns:
        np.ndarray: An int64 label vector.

    Raises:
        FormatError: If the size is not a whole number of u32 values or disagrees with `n`.
    """
    size = os.path.getsize(path)
    if n is None:
        if size % 4:
            raise FormatError(path, f"size {size} is not a multiple of 4 bytes")
        n = size // 4
    return read_array(path, "<u4", n).astype(np.int64)
