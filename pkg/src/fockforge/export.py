"""JSON-lines sparse triplet dumps of operators, vectors and series, plus basis manifests.

One header line describes the object; every following line is one nonzero
entry ``{"row", "col", "re", "im"}`` (vectors use ``col = 0``).
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import IO, Iterable, Union

import numpy as np
import scipy.sparse as sp

from .fock_core import FockBasis, SparseOperator, StateVector
from .transeries import GradedSeries, TransSeries

PathLike = Union[str, Path]


def _dump(line: dict) -> str:
    return json.dumps(line, sort_keys=True)


def operator_lines(op: SparseOperator, name: str = "operator") -> Iterable[str]:
    m = sp.coo_matrix(op.matrix)
    order = np.lexsort((m.col, m.row))
    yield _dump(
        {
            "kind": "operator",
            "name": name,
            "shape": [int(op.codomain.dim), int(op.domain.dim)],
            "nnz": int(m.nnz),
            "domain_sectors": [list(s) for s in op.domain.sectors],
            "codomain_sectors": [list(s) for s in op.codomain.sectors],
        }
    )
    for i in order:
        v = complex(m.data[i])
        yield _dump({"row": int(m.row[i]), "col": int(m.col[i]), "re": v.real, "im": v.imag})


def vector_lines(vec: StateVector, name: str = "vector") -> Iterable[str]:
    amps = np.asarray(vec.amplitudes)
    nz = np.flatnonzero(amps)
    yield _dump({"kind": "vector", "name": name, "shape": [int(amps.size), 1], "nnz": int(nz.size)})
    for i in nz:
        v = complex(amps[i])
        yield _dump({"row": int(i), "col": 0, "re": v.real, "im": v.imag})


def series_lines(series: Union[TransSeries, GradedSeries], name: str = "series") -> Iterable[str]:
    """Operator-coefficient series: one header per (degree, offset) block followed by its triplets."""
    graded = series.components if isinstance(series, GradedSeries) else {0: series}
    for degree, s in graded.items():
        for offset in s.offsets():
            coeff = s[offset]
            label = f"{name}[degree={degree},offset={list(offset)}]"
            if isinstance(coeff, SparseOperator):
                yield from operator_lines(coeff, label)
            else:
                v = complex(coeff)
                yield _dump({"kind": "scalar", "name": label, "re": v.real, "im": v.imag})


def write_lines(lines: Iterable[str], target: Union[PathLike, IO[str]]) -> None:
    if hasattr(target, "write"):
        for line in lines:
            target.write(line + "\n")
        return
    with open(target, "w", encoding="utf-8") as fh:
        write_lines(lines, fh)


def export_operator(op: SparseOperator, target, name: str = "operator") -> None:
    write_lines(operator_lines(op, name), target)


def export_vector(vec: StateVector, target, name: str = "vector") -> None:
    write_lines(vector_lines(vec, name), target)


def export_manifest(basis: FockBasis, target) -> None:
    text = json.dumps(basis.manifest(), indent=2, sort_keys=True)
    if hasattr(target, "write"):
        target.write(text + "\n")
    else:
        Path(target).write_text(text + "\n", encoding="utf-8")


def read_operator(path: PathLike, domain: FockBasis, codomain: FockBasis = None) -> SparseOperator:
    """Inverse of :func:`export_operator` for a single operator file."""
    codomain = domain if codomain is None else codomain
    rows, cols, vals = [], [], []
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        for line in fh:
            e = json.loads(line)
            rows.append(e["row"])
            cols.append(e["col"])
            vals.append(complex(e["re"], e["im"]))
    shape = tuple(header["shape"])
    if shape != (codomain.dim, domain.dim):
        raise ValueError(f"file shape {shape} does not match bases ({codomain.dim}, {domain.dim})")
    m = sp.csr_matrix((vals, (rows, cols)), shape=shape, dtype=complex)
    return SparseOperator(domain, codomain, m)
