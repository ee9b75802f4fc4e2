"""Plain-text file formats: edge lists, signals, weights and solver results.

Edge list::

    # optional comments
    n p
    u v        (p lines, 0-based vertex ids)

Signals and weights hold one float per line. Structured metadata goes into
JSON sidecars next to the data files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError
from .ordered_l1 import OrderedWeights, WeightsError


class FormatError(ValueError):
    """Malformed input file; the message carries the file and line."""


def _content_lines(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: cannot read ({exc.strerror or exc})") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def read_edge_list(path) -> Graph:
    lines = _content_lines(path)
    try:
        lineno, header = next(lines)
    except StopIteration:
        raise FormatError(f"{path}: empty edge list file") from None
    try:
        n, p = (int(tok) for tok in header.split())
    except ValueError:
        raise FormatError(f"{path}:{lineno}: header must be 'n p', got {header!r}") from None
    edges = []
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-integer vertex id in {line!r}") from None
    if len(edges) != p:
        raise FormatError(f"{path}: header announces {p} edges, found {len(edges)}")
    try:
        return Graph(n, edges)
    except GraphError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_edge_list(g: Graph, path, comment: str | None = None) -> None:
    with open(path, "w") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"{g.n} {g.p}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def read_vector(path) -> np.ndarray:
    values = []
    for lineno, line in _content_lines(path):
        try:
            values.append(float(line))
        except ValueError:
            raise FormatError(f"{path}:{lineno}: not a number: {line!r}") from None
    if not values:
        raise FormatError(f"{path}: no values")
    arr = np.array(values)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{path}: non-finite value")
    return arr


def write_vector(values, path) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(values, dtype=float):
            fh.write(f"{float(v)!r}\n")


def read_weights(path) -> OrderedWeights:
    try:
        return OrderedWeights(read_vector(path))
    except WeightsError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_json(data: dict, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True, default=_default) + "\n")


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_weights(w: OrderedWeights, path, metadata: dict | None = None) -> None:
    write_vector(w.lambdas, path)
    if metadata is not None:
        write_json(metadata, Path(str(path) + ".json"))


def write_denoise_result(result, y, csv_path, json_path, metadata: dict | None = None) -> None:
    """``vertex_id,y,beta_hat`` table plus a JSON sidecar with the solver state."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["vertex_id", "y", "beta_hat"])
        for i, (yi, bi) in enumerate(zip(np.asarray(y, dtype=float), result.beta_hat)):
            writer.writerow([i, repr(float(yi)), repr(float(bi))])
    info = {"gap": result.gap, "iterations": result.iterations, "converged": result.converged}
    write_json({**info, **(metadata or {})}, json_path)
