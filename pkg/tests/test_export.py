import json

import numpy as np

from fockforge import cli
from fockforge.bilinears import build_current, build_field
from fockforge.export import export_manifest, export_operator, export_vector, read_operator, series_lines
from fockforge.fock_core import StateVector, build_basis
from fockforge.lattice import GridSpec
from fockforge.transeries import TransSeries


def test_operator_round_trip(tmp_path):
    basis = build_basis(GridSpec(n_max=1), "fermi", (2, 1))
    op = build_current(basis, (1,), "up")
    path = tmp_path / "j.jsonl"
    export_operator(op, path)
    lines = path.read_text().splitlines()
    header = json.loads(lines[0])
    assert header["nnz"] == op.nnz == len(lines) - 1
    back = read_operator(path, basis)
    assert np.array_equal(back.toarray(), op.toarray())


def test_field_between_sectors(tmp_path):
    basis = build_basis(GridSpec(n_max=1), "fermi", (2, 0))
    op = build_field(basis, (0,), "up")
    path = tmp_path / "c.jsonl"
    export_operator(op, path)
    assert np.array_equal(read_operator(path, basis, op.codomain).toarray(), op.toarray())


def test_vector_and_manifest(tmp_path):
    basis = build_basis(GridSpec(n_max=1), "fermi", (1, 0))
    export_vector(StateVector.basis_state(basis, (0, 1, 0, 0, 0, 0)), tmp_path / "v.jsonl")
    rows = [json.loads(x) for x in (tmp_path / "v.jsonl").read_text().splitlines()[1:]]
    assert rows == [{"col": 0, "im": 0.0, "re": 1.0, "row": 1}]
    export_manifest(basis, tmp_path / "m.json")
    man = json.loads((tmp_path / "m.json").read_text())
    assert man["dimension"] == 3 and len(man["modes"]) == 6


def test_series_dump():
    s = TransSeries({(1,): 0.5, (-1,): 0.25j})
    lines = [json.loads(x) for x in series_lines(s)]
    assert {x["name"] for x in lines} == {"series[degree=0,offset=[-1]]", "series[degree=0,offset=[1]]"}


def test_cli_export(tmp_path):
    out = tmp_path / "x.jsonl"
    assert cli.main(["export", "x", "--out", str(out), "--nmax", "1", "--nup", "2", "--k", "1", "--order", "2"]) == 0
    assert json.loads(out.read_text().splitlines()[0])["kind"] == "operator"
    assert cli.main(["export", "basis", "--out", str(tmp_path / "b.json")]) == 0
