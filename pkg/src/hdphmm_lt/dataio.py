"""Datasets and their on-disk formats.

* real-valued observations: headered CSV, one row per time step;
* symbol sequences: whitespace- or comma-separated integers, one sequence per line;
* ground-truth binary matrices: 0/1 CSV with a header row.

CSV files are UTF-8 with ``\\n`` line endings and RFC-4180 quoting.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InputError


@dataclass
class Dataset:
    """One or more observation sequences with optional ground truth.

    ``sequences`` holds T x K float arrays or length-T integer arrays;
    ``truth`` holds matching T x D binary matrices.
    """

    sequences: list
    truth: list | None = None
    W: np.ndarray | None = None

    def __post_init__(self):
        if not self.sequences:
            raise InputError("a dataset needs at least one sequence")
        self.sequences = [np.asarray(s) for s in self.sequences]
        kinds = {s.ndim for s in self.sequences}
        if len(kinds) != 1:
            raise InputError("sequences mix symbol and real-valued observations")
        if self.symbolic:
            if any(not np.issubdtype(s.dtype, np.integer) for s in self.sequences):
                raise InputError("symbol sequences must be integer arrays")
        else:
            widths = {s.shape[1] for s in self.sequences}
            if len(widths) != 1:
                raise InputError("all sequences need the same number of channels")
            self.sequences = [s.astype(float) for s in self.sequences]
        if self.truth is not None:
            self.truth = [np.asarray(t, dtype=np.int8) for t in self.truth]
            if [len(t) for t in self.truth] != self.lengths:
                raise InputError("truth matrices must match sequence lengths")

    @property
    def symbolic(self) -> bool:
        return self.sequences[0].ndim == 1

    @property
    def lengths(self) -> list[int]:
        return [len(s) for s in self.sequences]

    @property
    def n_obs(self) -> int:
        return int(sum(self.lengths))

    def concat(self) -> np.ndarray:
        return np.concatenate(self.sequences, axis=0)

    def truth_concat(self) -> np.ndarray | None:
        return None if self.truth is None else np.concatenate(self.truth, axis=0)


def write_matrix_csv(path, matrix, header=None, prefix="c") -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    header = header or [f"{prefix}{i}" for i in range(matrix.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        ints = np.issubdtype(matrix.dtype, np.integer)
        for row in matrix:
            writer.writerow([int(v) for v in row] if ints else [repr(float(v)) for v in row])


def read_matrix_csv(path, dtype=float) -> np.ndarray:
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path} is empty")
    body = rows[1:]
    try:
        data = np.array([[float(v) for v in row] for row in body if row], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from exc
    if data.size == 0:
        data = np.zeros((0, len(rows[0])))
    return data.astype(dtype)


def write_symbol_sequences(path, sequences) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for seq in sequences:
            fh.write(" ".join(str(int(v)) for v in seq) + "\n")


def read_symbol_sequences(path) -> list[np.ndarray]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    seqs = []
    for i, line in enumerate(lines, 1):
        line = line.replace(",", " ").strip()
        if not line:
            continue
        try:
            seqs.append(np.array([int(tok) for tok in line.split()], dtype=np.int64))
        except ValueError as exc:
            raise InputError(f"{path}:{i}: not an integer list") from exc
    if not seqs:
        raise InputError(f"{path} contains no sequences")
    return seqs


def _listify(value):
    if value is None:
        return None
    return value if isinstance(value, list) else [value]


def load_dataset(layout: dict, base: Path | str = ".") -> Dataset:
    """Build a :class:`Dataset` from a config fragment.

    Recognised keys: ``observations`` (CSV path or list of paths),
    ``symbols`` (sequence file or list of files), ``truth`` (CSV path or
    list), ``W`` (CSV path).
    """
    base = Path(base)
    if "observations" in layout:
        seqs = [read_matrix_csv(base / p) for p in _listify(layout["observations"])]
    elif "symbols" in layout:
        seqs = [s for p in _listify(layout["symbols"]) for s in read_symbol_sequences(base / p)]
    else:
        raise InputError("data section needs 'observations' or 'symbols'")
    truth = None
    if layout.get("truth") is not None:
        truth = [read_matrix_csv(base / p, dtype=np.int8) for p in _listify(layout["truth"])]
    W = read_matrix_csv(base / layout["W"]) if layout.get("W") else None
    return Dataset(seqs, truth=truth, W=W)
