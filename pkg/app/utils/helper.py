"""The module defines various helper methods used by the application."""

import json
import os
from typing import Any, Dict, List, Tuple

import numpy as np

from app.utils.exceptions import FormatError


def derive_seed(seed: int, *keys: int) -> int:
    """
    Derives an independent child seed from a parent seed and a sequence of integer keys.

    Args:
        seed (int): The parent seed.
        *keys (int): Integers identifying the child stream (e.g. a restart index).

    Returns:
        int: A 31-bit child seed, usable by numpy, scikit-learn and torch alike.
    """
    sequence = np.random.SeedSequence([seed, *keys])
    return int(sequence.generate_state(1)[0] >> 1)


def append_jsonl(file: str, record: Dict[str, Any]) -> None:
    """
    Appends a single JSON record as one line of a JSONL file.

    Args:
        file (str): The file to write to.
        record (dict): The record to serialize.
    """
    with open(file=file, mode="a", encoding="utf-8") as f:
        f.write(json.dumps(record, sort_keys=True) + "\n")
        f.flush()


def read_jsonl(file: str) -> List[Dict[str, Any]]:
    """
    Reads every record of a JSONL file.

    Args:
        file (str): The file to read.

    Returns:
        list: The decoded records, in file order.
    """
    with open(file=file, mode="r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_json(file: str, data: Dict[str, Any]) -> None:
    """
    Writes a dictionary as an indented UTF-8 JSON document.

    Args:
        file (str): The file to write to.
        data (dict): The data to serialize.
    """
    with open(file=file, mode="w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(file: str) -> Dict[str, Any]:
    """
    Reads a UTF-8 JSON document.

    Args:
        file (str): The file to read.

    Returns:
        dict: The decoded document.

    Raises:
        FormatError: If the file is not valid JSON.
    """
    try:
        with open(file=file, mode="r", encoding="utf-8") as f:
            return json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise FormatError(file, f"invalid JSON ({e})") from e


def read_array(file: str, dtype: str, count: int, offset: int = 0) -> np.ndarray:
    """
    Reads exactly `count` little-endian values of the given dtype from a binary file.

    Args:
        file (str): The file to read.
        dtype (str): A numpy dtype string such as '<f4' or '<u4'.
        count (int): The number of values the file must hold after the header.
        offset (int): The header size in bytes.

    Returns:
        np.ndarray: A one-dimensional array of the values.

    Raises:
        FormatError: If the file length disagrees with the declared count.
    """
    itemsize = np.dtype(dtype).itemsize
    expected = offset + count * itemsize
    actual = os.path.getsize(file)
    if actual != expected:
        raise FormatError(
            file, f"size mismatch: expected {expected} bytes, found {actual}"
        )
    return np.fromfile(file, dtype=dtype, count=count, offset=offset)


def write_array(file: str, values: np.ndarray, dtype: str) -> None:
    """
    Writes the values of an array as raw little-endian data, row-major.

    Args:
        file (str): The file to write to.
        values (np.ndarray): The array to write.
        dtype (str): A numpy dtype string such as '<f4' or '<u4'.
    """
    np.ascontiguousarray(values, dtype=dtype).tofile(file)


def write_matrix(file: str, matrix: np.ndarray) -> None:
    """
    Writes a matrix with an 8-byte (rows, cols) u32le header followed by f32le row-major values.

    Args:
        file (str): The file to write to.
        matrix (np.ndarray): A two-dimensional array.
    """
    matrix = np.asarray(matrix)
    header = np.array(matrix.shape, dtype="<u4")
    with open(file, "wb") as f:
        f.write(header.tobytes())
        f.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def matrix_shape(file: str) -> Tuple[int, int]:
    """
    Returns the (rows, cols) header of a matrix file without reading the payload.

    Args:
        file (str): The file to inspect.

    Returns:
        tuple: The declared shape.

    Raises:
        FormatError: If the header is truncated.
    """
    if os.path.getsize(file) < 8:
        raise FormatError(file, "truncated header")
    rows, cols = np.fromfile(file, dtype="<u4", count=2)
    return int(rows), int(cols)


def read_matrix(file: str) -> np.ndarray:
    """
    Reads a matrix written by `write_matrix`.

    Args:
        file (str): The file to read.

    Returns:
        np.ndarray: A float32 array of shape (rows, cols).

    Raises:
        FormatError: If the header is truncated or the payload size disagrees with it.
    """
    rows, cols = matrix_shape(file)
    values = read_array(file, "<f4", rows * cols, offset=8)
    return values.reshape(rows, cols).astype(np.float32)
