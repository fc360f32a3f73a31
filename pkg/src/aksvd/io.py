"""Dataset loading and artifact persistence.

Formats are deliberately plain: dense matrices as headerless CSV with
17-significant-digit reals (value-exact round trips for float64), edge
lists as tab-separated 0-indexed integer pairs, reports as line-delimited
JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import DataError

_FLOAT_FMT = "%.17g"


@dataclass
class Dataset:
    matrix: np.ndarray
    labels: Optional[np.ndarray] = None
    kind: str = "general"   # "general" | "directed_graph" | "doc_term"

    def __post_init__(self):
        if self.kind == "directed_graph" and self.matrix.shape[0] != self.matrix.shape[1]:
            raise DataError("directed graph adjacency must be square")
        if self.labels is not None and len(self.labels) != self.matrix.shape[0]:
            raise DataError(
                f"labels length {len(self.labels)} does not match {self.matrix.shape[0]} rows"
            )


def load_dense_csv(path) -> np.ndarray:
    """Load a headerless comma-separated real matrix, preserving row order."""
    rows: List[List[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if width is None:
                width = len(tokens)
            elif len(tokens) != width:
                raise DataError(
                    f"{path}: line {lineno} has {len(tokens)} fields, expected {width}"
                )
            parsed = []
            for col, tok in enumerate(tokens, start=1):
                try:
                    parsed.append(float(tok))
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}, column {col}: cannot parse {tok!r} as a real number"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DataError(f"{path}: empty matrix file")
    return np.asarray(rows, dtype=np.float64)


def load_edge_list(path, n_nodes: Optional[int] = None) -> np.ndarray:
    """Load a directed edge list ("src<TAB>dst" per line) as a dense binary
    adjacency matrix.

    An optional "# n=<N>" header fixes the node count; otherwise it is
    max index + 1.  Duplicate edges collapse; self-loops are preserved.
    """
    edges = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                header = line[1:].strip()
                if header.startswith("n=") and n_nodes is None:
                    try:
                        n_nodes = int(header[2:])
                    except ValueError:
                        raise DataError(f"{path}: line {lineno}: bad node-count header {line!r}") from None
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}: line {lineno}: expected 'src<TAB>dst', got {line!r}")
            try:
                src, dst = int(parts[0]), int(parts[1])
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-integer node index in {line!r}") from None
            if src < 0 or dst < 0:
                raise DataError(f"{path}: line {lineno}: negative node index")
            edges.append((src, dst))
    if n_nodes is None:
        if not edges:
            raise DataError(f"{path}: empty edge list and no node-count header")
        n_nodes = max(max(s, d) for s, d in edges) + 1
    A = np.zeros((n_nodes, n_nodes))
    for lineno, (src, dst) in enumerate(edges):
        if src >= n_nodes or dst >= n_nodes:
            raise DataError(f"{path}: edge ({src}, {dst}) exceeds node count {n_nodes}")
        A[src, dst] = 1.0
    return A


def load_labels(path) -> np.ndarray:
    """Load one integer label per line."""
    labels = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                labels.append(int(float(line)))
            except ValueError:
                raise DataError(f"{path}: line {lineno}: cannot parse label {line!r}") from None
    if not labels:
        raise DataError(f"{path}: empty labels file")
    return np.asarray(labels, dtype=int)


def save_matrix_csv(path, values: np.ndarray) -> None:
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as f:
        for row in values:
            f.write(",".join(_FLOAT_FMT % v for v in row))
            f.write("\n")


def save_embeddings(path, emb) -> None:
    """Write embeddings as headerless CSV, one row per sample."""
    values = emb.values if hasattr(emb, "values") else np.asarray(emb)
    if values.size == 0:
        open(path, "w", encoding="utf-8").close()
        return
    save_matrix_csv(path, values)


def save_report(path, rows: List[dict]) -> None:
    """Write a report as line-delimited JSON, one object per line."""
    try:
        with open(path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row, sort_keys=True))
                f.write("\n")
    except OSError as exc:
        raise DataError(f"cannot write report to {path}: {exc}") from exc


def load_report(path) -> List[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows
