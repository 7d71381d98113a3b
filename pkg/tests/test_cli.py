import json
import logging
import subprocess
import sys

import pytest

from localmotif.cli import main
from localmotif.edgelist import parse_edge_list
from localmotif.errors import ContractError


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def test_parse_edge_list_ffl(write):
    g = parse_edge_list(write("e.tsv", "a b\nb c\na c\n"))
    assert g.n == 3 and g.n_edges == 3
    assert g.labels == ("a", "b", "c")
    assert g.edges == [(0, 1), (0, 2), (1, 2)]


def test_parse_edge_list_duplicates_and_loops(write, caplog):
    with caplog.at_level(logging.WARNING):
        g = parse_edge_list(write("e.tsv", "# header\na b\n\na b  # again\na a\n"))
    assert g.n_edges == 1
    text = caplog.text
    assert "duplicate" in text and "self-loop" in text
    g = parse_edge_list(write("l.tsv", "a a\na b\n"), allow_loops=True)
    assert g.has_edge(0, 0)


def test_parse_edge_list_malformed(write):
    with pytest.raises(ContractError, match=":2:"):
        parse_edge_list(write("e.tsv", "a b\na b c\n"))


def test_inspect_pattern(capsys):
    assert main(["inspect-pattern", "3;0->1,0->2,1->2"]) == 0
    out = capsys.readouterr().out
    classes = [ln for ln in out.splitlines() if ln.startswith("class")]
    assert len(classes) == 3
    assert all("subpattern 2;0->1" in ln for ln in classes)


def test_detect_three_cycle_finds_nothing(write, capsys):
    path = write("c.tsv", "x y\ny z\nz x\n")
    assert main(["detect", "--edges", path, "--null", "er", "--k-max", "3", "--alpha", "1e-3"]) == 0
    assert "no local motifs" in capsys.readouterr().out


def test_detect_records_use_original_labels(write, capsys, tmp_path):
    lines = [f"R{r} T{t}" for r in (1, 3) for t in range(6)]
    path = write("f.tsv", "\n".join(lines) + "\n")
    out = tmp_path / "out.jsonl"
    assert main(["detect", "--edges", path, "--k-max", "3", "--format", "records",
                 "--out", str(out), "--all"]) == 0
    recs = [json.loads(ln) for ln in out.read_text().splitlines()]
    assert any(r["status"] == "motif" for r in recs)
    for r in recs:
        for th in r["top_themes"]:
            for s in th["class_sets"]:
                assert all(v[0] in "RT" for v in s)


def test_detect_blockmodel_inputs(write, capsys):
    edges = write("f.tsv", "a b\nb c\na c\nc d\n")
    with pytest.raises(SystemExit) as exc:
        main(["detect", "--edges", edges, "--null", "blockmodel", "--k-max", "3"])
    assert exc.value.code == 2
    classes = write("z.txt", "a 0\nb 0\nc 1\nd 1\n")
    assert main(["detect", "--edges", edges, "--null", "blockmodel", "--classes", classes,
                 "--k-max", "3", "--all"]) == 0
    model = write("m.txt", "4 1\na 0\nb 0\nc 0\nd 0\n0.25\n")
    assert main(["detect", "--edges", edges, "--model", model, "--k-max", "3"]) == 0
    assert main(["detect", "--edges", edges, "--null", "expected-degree", "--k-max", "3"]) == 0


def test_errors_and_exit_codes(write, capsys):
    assert main(["detect", "--edges", "/nonexistent/file"]) == 1
    assert main(["inspect-pattern", "3;0->7"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["detect"])
    assert exc.value.code == 2
    edges = write("f.tsv", "a b\n")
    with pytest.raises(SystemExit) as exc:
        main(["detect", "--edges", edges, "--k-max", "9"])
    assert exc.value.code == 2


def test_census_counts(write, capsys):
    path = write("f.tsv", "a b\nb c\na c\nc d\n")
    assert main(["census", "--edges", path, "-k", "3"]) == 0
    rows = [ln.split("\t") for ln in capsys.readouterr().out.splitlines()]
    assert sorted(int(r[2]) for r in rows) == [1, 2]  # one FFL, two paths
    assert main(["census", "--edges", path, "-k", "3", "--occurrences"]) == 0
    assert "a,b,c" in capsys.readouterr().out


def test_simulate_is_deterministic(capsys, monkeypatch):
    args = ["simulate", "--preset", "reference", "--pattern", "ffl", "--replicates", "300", "--seed", "7"]
    assert main(args) == 0
    first = capsys.readouterr().out
    monkeypatch.setenv("LOCALMOTIF_THREADS", "2")
    assert main(args) == 0
    assert capsys.readouterr().out == first
    header = first.splitlines()[1].split("\t")
    assert header[:6] == ["t", "empirical", "ci_lo", "ci_hi", "bound", "ratio"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "localmotif", "inspect-pattern", "bifan"],
                          capture_output=True, text=True, check=True)
    assert "class 1 {2,3} subpattern 3;0->2,1->2" in proc.stdout
