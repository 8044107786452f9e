import json

import numpy as np
import pytest

from hccnet import fixtures, jsonio
from hccnet.cli import main
from hccnet.mda import Mda
from hccnet.ops import Tom


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _write(tmp_path, name, obj):
    p = tmp_path / name
    jsonio.write(p, obj)
    return str(p)


def test_signature_transformer(capsys):
    code, out, _ = _run(capsys, "signature", "--arch", str(fixtures.fixture_path("transformer")))
    assert code == 0
    assert json.loads(out) == {"c_op": 3, "c_t": 7, "c_alpha": 3, "c_o": 4, "c_a": 2}


def test_check_gt(capsys):
    code, out, _ = _run(capsys, "check", "--gt", str(fixtures.fixture_path("degenerate")))
    assert code == 1
    rep = json.loads(out)
    assert rep["consistent"] is False and rep["witness"]
    code, _, _ = _run(capsys, "check", "--gt", str(fixtures.fixture_path("cube")))
    assert code == 0


def test_eval_matches_oracle(tmp_path, capsys):
    tom = _write(tmp_path, "t.json", Tom.from_einsum("ijk,kl->il").to_json())
    rng = np.random.default_rng(0)
    a = _write(tmp_path, "a.json", Mda.from_array(rng.standard_normal((2, 3, 4))).to_json())
    b = _write(tmp_path, "b.json", Mda.from_array(rng.standard_normal((4, 2))).to_json())
    c1, o1, _ = _run(capsys, "eval", "--tom", tom, "--in", a, b)
    c2, o2, _ = _run(capsys, "oracle", "--tom", tom, "--in", a, b)
    assert c1 == c2 == 0
    x, y = json.loads(o1), json.loads(o2)
    assert x["shape"] == y["shape"]
    assert np.abs(np.array(x["data"]) - np.array(y["data"])).max() <= 1e-9


def test_eval_tropical(tmp_path, capsys):
    tom = _write(tmp_path, "t.json", Tom.from_einsum("ij,jk->ik").to_json())
    a = _write(tmp_path, "a.json", Mda.from_array(np.array([[1.0, 2.0], [3.0, 4.0]])).to_json())
    b = _write(tmp_path, "b.json", Mda.from_array(np.array([[5.0, 6.0], [7.0, 8.0]])).to_json())
    _, out, _ = _run(capsys, "eval", "--tom", tom, "--in", a, b, "--ops", "add_min")
    assert json.loads(out)["data"] == [6.0, 7.0, 8.0, 9.0]


def test_eval_precondition_failure(tmp_path, capsys):
    tom = _write(tmp_path, "t.json", Tom.from_einsum("ij,jk->ik").to_json())
    a = _write(tmp_path, "a.json", Mda.from_array(np.ones((2, 3))).to_json())
    code, out, _ = _run(capsys, "eval", "--tom", tom, "--in", a, a)
    assert code == 1 and json.loads(out)["ok"] is False


def test_forward_and_check_arch(capsys):
    arch = str(fixtures.fixture_path("polynets_core"))
    code, out, _ = _run(capsys, "forward", "--arch", arch, "--seed", "3")
    assert code == 0 and json.loads(out)["Y"]["shape"] == [2, 2]
    assert _run(capsys, "check", "--arch", arch)[0] == 0
    assert _run(capsys, "check", "--arch", str(fixtures.fixture_path("vim")))[0] == 1


def test_decompose_and_merge(tmp_path, capsys):
    cone = _write(tmp_path, "c.json", Tom.from_einsum("ipq,ipr,iqr->pqr").to_json())
    code, out, _ = _run(capsys, "decompose", "--tom", cone)
    assert code == 0 and len(json.loads(out)["chain"]) == 2
    code, out, _ = _run(capsys, "decompose", "--tom", cone, "--ops", "max_add")
    assert code == 1
    t1 = _write(tmp_path, "q.json", Tom.from_einsum("ij,jk->ik").to_json())
    t2 = _write(tmp_path, "s.json", Tom.from_einsum("ik,lk->il").to_json())
    code, out, _ = _run(capsys, "merge", "--tom1", t1, "--tom2", t2, "--bind", "0")
    assert code == 0 and json.loads(out)["rows"] == 3


def test_sample_directory(tmp_path, capsys):
    code, out, _ = _run(capsys, "sample", "--n", "3", "--seed", "4", "--input", "8x4x4", "--out", str(tmp_path / "d"))
    assert code == 0
    assert len(list((tmp_path / "d").iterdir())) == 4
    again = tmp_path / "e"
    _run(capsys, "sample", "--n", "3", "--seed", "4", "--input", "8x4x4", "--out", str(again))
    for p in (tmp_path / "d").iterdir():
        assert p.read_bytes() == (again / p.name).read_bytes()


def test_convert_round_trip(tmp_path, capsys):
    cube = str(fixtures.fixture_path("cube"))
    code, out, _ = _run(capsys, "convert", "--gt", cube, "--to", "hcc")
    assert code == 0
    h = tmp_path / "h.json"
    h.write_text(out)
    code, out, _ = _run(capsys, "convert", "--hcc", str(h), "--to", "mda")
    assert code == 0 and json.loads(out)["shape"] == [2, 2, 2]


def test_modemap_check(tmp_path, capsys):
    m = _write(tmp_path, "m.json", {"kind": "unfold", "image_shape": [1, 4, 4], "patch": [2, 2], "stride": [2, 2]})
    assert _run(capsys, "check", "--modemap", m)[0] == 0


@pytest.mark.parametrize("argv", [["frobnicate"], ["signature"], ["eval", "--tom"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2


def test_malformed_files(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(capsys, "signature", "--arch", str(bad))[0] == 2
    assert _run(capsys, "signature", "--arch", str(tmp_path / "missing.json"))[0] == 2
    junk = _write(tmp_path, "junk.json", {"tensors": 4})
    assert _run(capsys, "signature", "--arch", junk)[0] == 2


def test_oracle_module_is_independent():
    import ast
    import inspect

    from hccnet import cli, oracle

    tree = ast.parse(inspect.getsource(oracle))
    imported = {n.module for n in ast.walk(tree) if isinstance(n, ast.ImportFrom)}
    imported |= {a.name for n in ast.walk(tree) if isinstance(n, ast.Import) for a in n.names}
    assert all(not (m or "").startswith((".", "hccnet")) for m in imported)
    assert imported <= {"__future__", "itertools", "operator"}
    src = inspect.getsource(cli.cmd_oracle)
    assert "from .oracle import" in src and "from .ops" not in src and "from .mda" not in src
