import json
import subprocess
import sys
from pathlib import Path

import pytest

from padeval import metrics
from padeval.cli import run
from padeval.model import parse_manifest, parse_scores

DATA = Path(__file__).parent / "data"


@pytest.fixture
def demo(tmp_path):
    out = tmp_path / "demo"
    assert run(["synth", "--two-class", "--mu-bf", "0.6", "--mu-attack", "0.4", "--sigma", "0.1",
                "--n", "2000", "--seed", "7", "--out", str(out)]) == 0
    return out


def _inputs(d):
    return ["--scores", str(d / "scores.csv"), "--manifest", str(d / "manifest.json")]


class TestEval:
    def test_report_file(self, demo, tmp_path):
        out = tmp_path / "report.json"
        assert run(["eval", *_inputs(demo), "--tau", "auto:bpcer100", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["schema"] == "padeval.report/1"
        assert len(doc["ladder"]) == 8
        assert doc["tau_selector"] == "auto:bpcer100"
        assert doc["dataset"] == "scores"

    def test_markdown_by_extension(self, demo, tmp_path):
        out = tmp_path / "r.md"
        assert run(["eval", *_inputs(demo), "--out", str(out)]) == 0
        assert out.read_text().startswith("# PAD assessment: scores\n")

    def test_stdout(self, demo, capsys, monkeypatch):
        monkeypatch.delenv("PADEVAL_OUT", raising=False)
        assert run(["eval", *_inputs(demo), "--report-format", "markdown", "--tau", "0.5"]) == 0
        assert "| ACER(τ) |" in capsys.readouterr().out

    def test_fixture_with_confusion(self, tmp_path):
        svg = tmp_path / "cm.svg"
        rc = run(["eval", "--scores", str(DATA / "ten_rows.csv"), "--manifest", str(DATA / "ten_rows_manifest.json"),
                  "--out", str(tmp_path / "r.json"), "--confusion-svg", str(svg), "--confusion-mode", "binary"])
        assert rc == 0
        assert svg.read_text().startswith("<?xml")

    def test_synth_then_eval_eer(self, tmp_path):
        d = tmp_path / "big"
        assert run(["synth", "--two-class", "--mu-bf", "0.6", "--mu-attack", "0.4", "--sigma", "0.1",
                    "--n", "100000", "--seed", "7", "--out", str(d)]) == 0
        assert run(["eval", *_inputs(d), "--out", str(tmp_path / "r.json")]) == 0
        eer = json.loads((tmp_path / "r.json").read_text())["eer"]["eer"]
        assert abs(eer - 0.158655) <= 0.004


class TestOtherCommands:
    def test_weights(self, capsys, monkeypatch):
        monkeypatch.delenv("PADEVAL_OUT", raising=False)
        assert run(["weights", "--counts", "bonafide=100,attack=100"]) == 0
        assert capsys.readouterr().out == "class,weight\nbonafide,1.0000\nattack,1.0000\n"

    def test_weights_file(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("PADEVAL_OUT", raising=False)
        f = tmp_path / "c.csv"
        f.write_text("class,count\nbonafide,21139\ncomposite,21448\nsynthetic,19862\n")
        assert run(["weights", "--counts-file", str(f)]) == 0
        assert "composite,0.9705" in capsys.readouterr().out

    def test_det_and_eer(self, demo, tmp_path):
        det, eer = tmp_path / "det.svg", tmp_path / "eer.svg"
        assert run(["det", *_inputs(demo), "--out", str(det), "--eer-svg", str(eer), "--title", "demo"]) == 0
        assert "<polyline" in det.read_text() and "EER=" in eer.read_text()

    @pytest.mark.parametrize("extra", [[], ["--log"], ["--tau", "auto:bpcer20", "--bandwidth", "0.02"]])
    def test_kde(self, demo, tmp_path, extra):
        out = tmp_path / "kde.svg"
        assert run(["kde", *_inputs(demo), "--out", str(out), *extra]) == 0
        assert out.read_text().endswith("</svg>\n")

    def test_cascade(self, tmp_path):
        tmp = tmp_path
        (tmp / "bm.json").write_text('{"bona_fide": "bonafide", "attack_species": ["composite"], '
                                     '"unscored_species": ["print"]}')
        (tmp / "sm.json").write_text('{"bona_fide": "bonafide", "attack_species": ["print"], '
                                     '"unscored_species": ["composite"]}')
        (tmp / "b.csv").write_text("sample_id,label,bonafide,composite\n"
                                   "a,bonafide,0.9,0.1\nb,bonafide,0.8,0.2\nc,composite,0.1,0.9\nd,print,0.7,0.3\n")
        (tmp / "s.csv").write_text("sample_id,label,bonafide,print\n"
                                   "d,print,0.2,0.8\nc,composite,0.6,0.4\nb,bonafide,0.9,0.1\na,bonafide,0.7,0.3\n")
        out = tmp / "c.md"
        rc = run(["cascade", "--border-scores", str(tmp / "b.csv"), "--border-manifest", str(tmp / "bm.json"),
                  "--source-scores", str(tmp / "s.csv"), "--source-manifest", str(tmp / "sm.json"),
                  "--tau-border", "0.5", "--tau-source", "0.5", "--out", str(out),
                  "--confusion-svg", str(tmp / "cm.svg")])
        assert rc == 0
        text = out.read_text()
        assert "| APCER_composite | 0.0000 |" in text and "| APCER_print | 0.0000 |" in text

    def test_synth_spec_jsonl(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text('{"bona_fide": {"label": "bf", "loc": 1, "scale": 0.5, "n": 20}, '
                        '"attack_species": [{"label": "a", "loc": 0, "scale": 0.5, "n": 10}], "seed": 3}')
        assert run(["synth", "--spec", str(spec), "--scores-format", "jsonl", "--out", str(tmp_path / "o")]) == 0
        tax = parse_manifest((tmp_path / "o" / "manifest.json").read_text())
        s = parse_scores((tmp_path / "o" / "scores.jsonl").read_text(), tax)
        assert s.n_bona_fide == 20 and s.n_per_species == {"a": 10}

    def test_module_entry_point(self, demo):
        proc = subprocess.run([sys.executable, "-m", "padeval", "eval", *_inputs(demo), "--tau", "0.5"],
                              capture_output=True, text=True, env={"PATH": ""})
        assert proc.returncode == 0
        assert json.loads(proc.stdout)["chosen_tau"] == 0.5


class TestExitCodes:
    @pytest.mark.parametrize("argv", [[], ["bogus"], ["eval"], ["weights"], ["synth", "--two-class", "--n", "5"],
                                      ["weights", "--counts", "a=1", "--counts-file", "x"]])
    def test_usage(self, argv, capsys):
        assert run(argv) == 1
        assert "padeval: error" in capsys.readouterr().err

    def test_missing_file_names_flag(self, tmp_path, capsys):
        assert run(["eval", "--scores", str(tmp_path / "nope.csv"), "--manifest", "m.json"]) == 1
        assert "--manifest" in capsys.readouterr().err

    def test_bad_selector(self, demo, capsys):
        assert run(["eval", *_inputs(demo), "--tau", "auto:bpcer7"]) == 1
        assert "--tau" in capsys.readouterr().err

    def test_unknown_species(self, demo):
        assert run(["eval", *_inputs(demo), "--species", "print"]) == 1

    def test_bad_row_names_row_and_field(self, tmp_path, capsys):
        (tmp_path / "m.json").write_text('{"bona_fide": "bf", "attack_species": ["x"]}')
        (tmp_path / "s.csv").write_text("sample_id,label,bf,x\na,bf,0.5,0.5\nb,x,1.7,0\n")
        assert run(["eval", "--scores", str(tmp_path / "s.csv"), "--manifest", str(tmp_path / "m.json")]) == 2
        err = capsys.readouterr().err
        assert "row 3" in err and "'bf'" in err

    def test_bad_manifest(self, tmp_path):
        (tmp_path / "m.json").write_text('{"bona_fide": "bf"}')
        (tmp_path / "s.csv").write_text("sample_id,label,bf,x\n")
        assert run(["eval", "--scores", str(tmp_path / "s.csv"), "--manifest", str(tmp_path / "m.json")]) == 2

    def test_weights_zero_count(self):
        assert run(["weights", "--counts", "a=0,b=3"]) == 2

    def test_refuses_overwrite(self, demo, tmp_path, capsys):
        out = tmp_path / "r.json"
        out.write_text("keep")
        assert run(["eval", *_inputs(demo), "--out", str(out)]) == 1
        assert out.read_text() == "keep"
        assert "--force" in capsys.readouterr().err
        assert run(["eval", *_inputs(demo), "--out", str(out), "--force"]) == 0
        assert out.read_text().startswith("{")

    def test_no_partial_outputs(self, demo, tmp_path):
        # the second output already exists, so neither is written
        svg, out = tmp_path / "cm.svg", tmp_path / "r.json"
        out.write_text("keep")
        assert run(["eval", *_inputs(demo), "--out", str(out), "--confusion-svg", str(svg)]) == 1
        assert not svg.exists()
        assert sorted(p.name for p in tmp_path.iterdir()) == ["demo", "r.json"]


class TestDeterminismAndEnv:
    def test_byte_identical(self, demo, tmp_path):
        runs = []
        for k in range(2):
            d = tmp_path / f"run{k}"
            assert run(["det", *_inputs(demo), "--out", str(d / "det.svg"), "--eer-svg", str(d / "eer.svg")]) == 0
            assert run(["kde", *_inputs(demo), "--log", "--out", str(d / "kde.svg")]) == 0
            assert run(["eval", *_inputs(demo), "--out", str(d / "r.md"), "--confusion-svg", str(d / "cm.svg")]) == 0
            runs.append({p.name: p.read_bytes() for p in d.iterdir()})
        assert runs[0] == runs[1] and len(runs[0]) == 5

    def test_env_default_dir(self, demo, tmp_path, monkeypatch):
        monkeypatch.setenv("PADEVAL_OUT", str(tmp_path / "outdir"))
        assert run(["eval", *_inputs(demo)]) == 0
        assert run(["det", *_inputs(demo)]) == 0
        assert sorted(p.name for p in (tmp_path / "outdir").iterdir()) == ["det.svg", "report.json"]

    def test_eval_matches_library(self, demo, tmp_path):
        out = tmp_path / "r.json"
        run(["eval", *_inputs(demo), "--out", str(out)])
        s = parse_scores((demo / "scores.csv").read_text(), parse_manifest((demo / "manifest.json").read_text()))
        assert json.loads(out.read_text())["eer"]["eer"] == metrics.eer(s).eer
