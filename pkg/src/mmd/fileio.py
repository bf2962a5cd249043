"""File formats: sample columns, an optional binary format, CSV tables, configs.

Signals and phases are single-column headerless text (one value per line) or
a compact binary layout: the 8-byte magic "MMDSIG01" followed by raw
little-endian float64 samples.  Readers sniff the magic, so either format is
accepted wherever a sample file is expected.  Text is written with enough
digits to round-trip float64 exactly.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .errors import ValidationError

MAGIC = b"MMDSIG01"

PathLike = Union[str, Path]


def write_samples_text(path: PathLike, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=np.float64)
    with open(path, "w", encoding="ascii") as fh:
        for v in values:
            fh.write(f"{v:.17g}\n")


def write_samples_binary(path: PathLike, values: np.ndarray) -> None:
    values = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(values.tobytes())


def write_samples(path: PathLike, values: np.ndarray, binary: bool = False) -> None:
    if binary:
        write_samples_binary(path, values)
    else:
        write_samples_text(path, values)


def read_samples(path: PathLike) -> np.ndarray:
    """Read a sample file, accepting either the text or the binary layout."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
        if head == MAGIC:
            payload = fh.read()
            if len(payload) % 8 != 0:
                raise ValidationError(f"{path}: truncated binary sample file")
            return np.frombuffer(payload, dtype="<f8").copy()
    try:
        values = np.loadtxt(path, dtype=np.float64, ndmin=1)
    except ValueError as exc:
        raise ValidationError(f"{path}: not a sample file ({exc})") from exc
    if values.ndim != 1:
        raise ValidationError(f"{path}: expected a single column")
    return values


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Comma-separated table with a one-line header; floats keep full precision."""
    def fmt(v):
        if isinstance(v, float):
            return f"{v:.17g}"
        return str(v)

    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path: PathLike) -> Tuple[List[str], List[List[str]]]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty csv") from None
        return header, [row for row in reader if row]


def write_config(path: PathLike, entries: Dict[str, object]) -> None:
    """Key-value run metadata, one `key = value` per line."""
    with open(path, "w", encoding="ascii") as fh:
        for key, value in entries.items():
            if isinstance(value, float):
                fh.write(f"{key} = {value:.17g}\n")
            else:
                fh.write(f"{key} = {value}\n")


#: accepted metadata keys (reserved front-end parameters included but unused)
CONFIG_KEYS = frozenset({
    "s", "rad", "red", "J1", "J2", "M0", "M1", "b",
    "epsilon", "epsilon1", "epsilon2", "Ls", "L", "N", "K",
    "algorithm", "seed", "example", "nufft_tolerance",
})


def read_config(path: PathLike, known_only: bool = False) -> Dict[str, str]:
    out: Dict[str, str] = {}
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected `key = value`")
            key, _, value = line.partition("=")
            key = key.strip()
            if known_only and key not in CONFIG_KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value.strip()
    return out
