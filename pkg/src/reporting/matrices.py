"""Complex matrix encodings: nested [re, im] arrays for JSON and a "re im" text dump."""

from pathlib import Path

import numpy as np

from src.errors import ConfigurationError


def encode_complex(value: complex) -> list[float]:
    value = complex(value)
    return [value.real, value.imag]


def encode_matrix(A: np.ndarray) -> list:
    """Nested lists with every complex entry as [re, im]; works for vectors and matrices."""
    A = np.asarray(A, dtype=complex)
    return np.stack([A.real, A.imag], axis=-1).tolist()


def decode_matrix(data, shape: tuple[int, ...] | None = None) -> np.ndarray:
    """
    Inverse of encode_matrix. Plain real numbers are accepted in place of pairs.

    Raises:
        ConfigurationError: If entries are neither numbers nor [re, im] pairs
    """
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"Malformed matrix entries: {exc}")
    if shape is not None and arr.shape == tuple(shape):
        out = arr.astype(complex)
    elif arr.ndim >= 1 and arr.shape[-1] == 2:
        out = arr[..., 0] + 1j * arr[..., 1]
    else:
        out = arr.astype(complex)
    if shape is not None and out.shape != tuple(shape):
        raise ConfigurationError(f"Matrix has shape {out.shape}, expected {tuple(shape)}")
    return out


def write_matrix_text(A: np.ndarray, path: Path) -> None:
    """Row-major text dump, one matrix row per line, entries as "re im" pairs."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    for row in A:
        lines.append("  ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def dump_blocks(blocks, directory: Path, gram=None) -> list[Path]:
    """
    Write each Fock block matrix as block_mNNN.txt, plus gram.txt when a Gram
    matrix is given, for inspection outside the toolkit.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for block in blocks:
        path = directory / f"block_m{block.m:03d}.txt"
        write_matrix_text(block.A, path)
        written.append(path)
    if gram is not None:
        path = directory / "gram.txt"
        write_matrix_text(gram.G, path)
        written.append(path)
    return written
