import json

import pytest

from nervepool.cli import EXIT_VERIFY, main
from nervepool.io import parse_complex

HOUSE_TEXT = "v1,v2,v3\nv0,v1\nv2,v3\nv3,v4\nv1,v3\nv0,v4\n"
HOUSE_PARTITION = "v0,U1\nv4,U1\nv1,U2\nv2,U2\nv3,U2\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "k.txt").write_text(HOUSE_TEXT)
    (tmp_path / "p.txt").write_text(HOUSE_PARTITION)
    (tmp_path / "id.txt").write_text("".join(f"v{i},v{i}\n" for i in range(5)))
    (tmp_path / "x0.txt").write_text("v0,1\nv1,0\nv2,0\nv3,0\nv4,3\n")
    return tmp_path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCommands:
    def test_betti(self, capsys, files):
        code, out, _ = run(capsys, "betti", "--complex", str(files / "k.txt"))
        assert code == 0 and out == "1 1 0\n"

    def test_pool(self, capsys, files):
        code, out, _ = run(capsys, "pool", "--complex", str(files / "k.txt"),
                           "--partition", str(files / "p.txt"), "--features", str(files / "x0.txt"))
        doc = json.loads(out)
        assert code == 0
        assert doc["output"]["simplices"] == [[["U1"], ["U2"]], [["U1", "U2"]]]
        assert doc["features"]["0"] == [[4.0], [0.0]]

    def test_pool_singletons_reproduce_input(self, capsys, files):
        code, out, _ = run(capsys, "pool", "--complex", str(files / "k.txt"),
                           "--partition", str(files / "id.txt"))
        doc = json.loads(out)
        assert code == 0
        assert doc["output"]["simplices"] == doc["input"]["simplices"]

    def test_pool_and_nerve_agree(self, capsys, files):
        args = ["--complex", str(files / "k.txt"), "--partition", str(files / "p.txt")]
        _, pooled, _ = run(capsys, "pool", *args)
        _, nerve_text, _ = run(capsys, "nerve", *args)
        labels = [[tuple(s) for s in layer] for layer in json.loads(pooled)["output"]["simplices"]]
        assert labels == [list(layer) for layer in parse_complex(nerve_text).simplices_by_dim]

    def test_out_file(self, capsys, files):
        target = files / "nerve.txt"
        code, out, _ = run(capsys, "nerve", "--complex", str(files / "k.txt"),
                           "--partition", str(files / "p.txt"), "--out", str(target))
        assert code == 0 and out == "" and target.read_text() == "U1,U2\n"

    def test_gen(self, capsys):
        code, out, _ = run(capsys, "gen", "--vertices", "4", "--max-dim", "3", "--density", "1", "--seed", "2")
        assert code == 0 and out == "v0,v1,v2,v3\n"

    def test_dot(self, capsys, files):
        code, out, _ = run(capsys, "dot", "--complex", str(files / "k.txt"),
                           "--partition", str(files / "p.txt"))
        assert code == 0 and out.count(" -- ") == 6

    def test_verify(self, capsys):
        code, out, _ = run(capsys, "verify", "--suite", "all", "--instances", "3", "--seed", "5")
        assert code == 0 and out.strip().endswith("9/9 passed")

    def test_verify_failure_exit_code(self, capsys, monkeypatch):
        from nervepool import cli
        from nervepool.verify import VerificationReport
        monkeypatch.setattr(cli, "run_suite",
                            lambda *a, **k: [VerificationReport("identity", False, 1, 0, 1, 0, "x")])
        code, out, _ = run(capsys, "verify", "--suite", "identity")
        assert code == EXIT_VERIFY and "0/1 passed" in out


class TestErrors:
    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "betti", "--complex", str(tmp_path / "nope.txt"))
        assert code == 1 and "cannot read" in err

    def test_parse_error_has_line(self, capsys, tmp_path):
        (tmp_path / "bad.txt").write_text("a,b\nc,c\n")
        code, _, err = run(capsys, "betti", "--complex", str(tmp_path / "bad.txt"))
        assert code == 1 and "line 2" in err

    def test_incomplete_partition(self, capsys, files):
        (files / "short.txt").write_text("v0,U1\n")
        code, _, err = run(capsys, "pool", "--complex", str(files / "k.txt"),
                           "--partition", str(files / "short.txt"))
        assert code == 1 and "without a cluster" in err

    def test_unknown_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["betti", "--bogus"])
        assert info.value.code == 1

    def test_no_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 1
