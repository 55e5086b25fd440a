"""
Utility functions for reading and writing text documents (matrices, partitions, chains, reports)
"""
import json
import logging
import os

import numpy as np

from core.errors import DocumentError

logger = logging.getLogger(__name__)


def matrix_to_document(matrix):
    """Encode a square complex matrix as {"dim": n, "entries": [[re, im], ...]} row-major"""
    array = np.asarray(matrix, dtype=complex)
    return {
        "dim": int(array.shape[0]),
        "entries": [[float(value.real), float(value.imag)] for value in array.reshape(-1)]
    }


def matrix_from_document(document):
    """Decode a matrix document, rejecting non-square or non-finite data"""
    try:
        dim = int(document["dim"])
        entries = document["entries"]
    except (KeyError, TypeError, ValueError) as e:
        raise DocumentError(f"Matrix document needs 'dim' and 'entries': {str(e)}")
    if dim < 1:
        raise DocumentError(f"Matrix dim must be >= 1, got {dim}")
    if len(entries) != dim * dim:
        raise DocumentError(f"Matrix of dim {dim} needs {dim * dim} entries, got {len(entries)} (not square)")
    try:
        pairs = np.array(entries, dtype=float)
    except (TypeError, ValueError) as e:
        raise DocumentError(f"Matrix entries must be [re, im] pairs: {str(e)}")
    if pairs.shape != (dim * dim, 2):
        raise DocumentError(f"Matrix entries must be [re, im] pairs, got shape {pairs.shape}")
    if not np.all(np.isfinite(pairs)):
        bad = int(np.argwhere(~np.isfinite(pairs))[0][0])
        raise DocumentError(f"Non-finite matrix entry at row {bad // dim}, column {bad % dim}")
    return (pairs[:, 0] + 1j * pairs[:, 1]).reshape(dim, dim)


def dump_document(data):
    """Deterministic text rendering (sorted keys) so reports can be diffed"""
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


def save_json_document(path, data):
    """Save a document to path, creating parent directories"""
    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(dump_document(data))
        logger.info(f"Document saved to {path}")
    except OSError as e:
        logger.error(f"Error saving document to {path}: {str(e)}")
        raise DocumentError(f"Cannot write {path}: {str(e)}")


def read_json_document(path):
    """Read a document from path"""
    if not os.path.exists(path):
        raise DocumentError(f"Input file not found: {path}")
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        logger.debug(f"Document read from {path}")
        return data
    except json.JSONDecodeError as e:
        raise DocumentError(f"Malformed document {path}: line {e.lineno}, column {e.colno}: {e.msg}")
    except OSError as e:
        raise DocumentError(f"Cannot read {path}: {str(e)}")


def read_matrix(path):
    return matrix_from_document(read_json_document(path))


def save_matrix(path, matrix):
    save_json_document(path, matrix_to_document(matrix))
