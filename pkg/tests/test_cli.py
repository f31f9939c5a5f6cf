import json

import pytest

from matchcast.cli import main
from matchcast.data import serialize_matches
from matchcast.selftest import simulate_played_season


def count_scenario_csv():
    """A partial season where the matchday-20 fixture meets known tallies.

    Through matchday 19 the home side has a (6,2,1) home record and the
    visitor a (2,3,4) away record, the inputs of the equal-mixture worked
    example.
    """
    rows = ["season,matchday,home,away,home_goals,away_goals"]
    home_results = [(2, 0)] * 6 + [(1, 1)] * 2 + [(0, 1)]        # 6W 2D 1L at home
    away_results = [(0, 1)] * 2 + [(1, 1)] * 3 + [(2, 0)] * 4    # 2W 3D 4L away
    for k, (hg, ag) in enumerate(home_results, start=1):
        rows.append(f"2014,{k},Redbrook,Filler{k},{hg},{ag}")
    for k, (hg, ag) in enumerate(away_results, start=1):
        rows.append(f"2014,{k},Other{k},Port Vale,{hg},{ag}")
    rows.append("2014,20,Redbrook,Port Vale,,")
    return "\n".join(rows) + "\n"


@pytest.fixture
def matches_file(tmp_path, two_seasons):
    path = tmp_path / "matches.csv"
    records = [m for s in two_seasons for m in s.matches]
    path.write_text(serialize_matches(records), encoding="utf-8")
    return path


class TestValidate:
    def test_reports_seasons(self, matches_file, capsys):
        assert main(["validate", "--matches", str(matches_file)]) == 0
        out = capsys.readouterr().out
        assert "season 2013" in out
        assert "season 2014" in out

    def test_full_championship_reported_complete(self, tmp_path, capsys, rng):
        teams = [f"team{k:02d}" for k in range(20)]
        season = simulate_played_season(teams, 2014, rng)
        path = tmp_path / "full.csv"
        path.write_text(serialize_matches(season.matches), encoding="utf-8")
        assert main(["validate", "--matches", str(path)]) == 0
        assert "complete season" in capsys.readouterr().out

    def test_duplicate_fixture_reports_both_lines(self, tmp_path, capsys):
        text = (
            "season,matchday,home,away,home_goals,away_goals\n"
            "2014,1,A,B,1,0\n"
            "2014,2,B,A,0,0\n"
            "2014,1,A,B,2,2\n"
        )
        path = tmp_path / "dup.csv"
        path.write_text(text)
        assert main(["validate", "--matches", str(path)]) == 2
        err = capsys.readouterr().err
        assert "lines 2, 4" in err

    def test_scheduled_matches_listed(self, tmp_path, capsys):
        path = tmp_path / "sched.csv"
        path.write_text(count_scenario_csv())
        assert main(["validate", "--matches", str(path)]) == 0
        out = capsys.readouterr().out
        assert "scheduled: matchday 20, redbrook vs port vale" in out

    def test_malformed_file_exits_nonzero(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("season,matchday,home,away,home_goals,away_goals\n2014,1,A,A,1,0\n")
        assert main(["validate", "--matches", str(path)]) == 2
        assert "line 2" in capsys.readouterr().err


class TestPredict:
    def test_worked_example_row(self, tmp_path, capsys):
        path = tmp_path / "t1.csv"
        path.write_text(count_scenario_csv())
        assert (
            main(
                [
                    "predict",
                    "--matches",
                    str(path),
                    "--matchday",
                    "20",
                    "--models",
                    "mn-dir1,trivial",
                ]
            )
            == 0
        )
        out = capsys.readouterr().out
        lines = [l for l in out.splitlines() if l.startswith("mn-dir1")]
        assert len(lines) == 1
        fields = lines[0].split(",")
        assert fields[3:5] == ["redbrook", "port vale"]
        p = tuple(float(x) for x in fields[5:8])
        assert p[0] == pytest.approx(0.5, abs=1e-9)
        assert p[1] == pytest.approx(0.291667, abs=5e-7)
        assert p[2] == pytest.approx(0.208333, abs=5e-7)

    def test_trivial_rows_uniform(self, tmp_path, capsys):
        path = tmp_path / "t1.csv"
        path.write_text(count_scenario_csv())
        main(["predict", "--matches", str(path), "--matchday", "20", "--models", "trivial"])
        out = capsys.readouterr().out
        row = [l for l in out.splitlines() if l.startswith("trivial")][0]
        probs = [float(x) for x in row.split(",")[5:8]]
        assert probs == pytest.approx([1 / 3, 1 / 3, 1 / 3], abs=1e-15)

    def test_failed_model_reported_others_emitted(self, tmp_path, capsys):
        # mn-dir2 cannot tune on an incomplete first half at matchday 2;
        # the run still emits the trivial rows and exits 0.
        path = tmp_path / "t1.csv"
        path.write_text(count_scenario_csv())
        code = main(
            [
                "predict",
                "--matches",
                str(path),
                "--matchday",
                "2",
                "--models",
                "mn-dir2,trivial",
            ]
        )
        assert code == 0
        captured = capsys.readouterr()
        assert "mn-dir2 failed" in captured.err
        assert any(l.startswith("trivial") for l in captured.out.splitlines())

    def test_external_predictor_missing_fixture_flagged(self, tmp_path, capsys):
        path = tmp_path / "t1.csv"
        path.write_text(count_scenario_csv())
        ext = tmp_path / "ext.csv"
        ext.write_text("season,matchday,home,away,p1,p2,p3\n")
        main(
            [
                "predict",
                "--matches",
                str(path),
                "--matchday",
                "20",
                "--models",
                f"external:{ext}",
            ]
        )
        assert "no prediction for redbrook vs port vale" in capsys.readouterr().err

    def test_multi_season_requires_season_flag(self, matches_file, capsys):
        assert main(["predict", "--matches", str(matches_file), "--matchday", "6"]) == 2
        assert "--season" in capsys.readouterr().err

    def test_writes_csv_when_out_given(self, tmp_path, capsys):
        path = tmp_path / "t1.csv"
        path.write_text(count_scenario_csv())
        out_dir = tmp_path / "out"
        main(
            [
                "predict",
                "--matches",
                str(path),
                "--matchday",
                "20",
                "--models",
                "trivial",
                "--out",
                str(out_dir),
            ]
        )
        written = out_dir / "predictions_matchday20.csv"
        assert written.exists()
        assert written.read_text().startswith("model,season,matchday")

    def test_dump_params_exports_fitted_values(self, tmp_path, capsys):
        path = tmp_path / "t1.csv"
        path.write_text(count_scenario_csv())
        out_dir = tmp_path / "out"
        main(
            [
                "predict",
                "--matches",
                str(path),
                "--matchday",
                "20",
                "--models",
                "bt,poisson-lee",
                "--dump-params",
                "--out",
                str(out_dir),
            ]
        )
        bt_text = (out_dir / "params_bt_matchday20.csv").read_text()
        assert bt_text.startswith("team,worth")
        assert "gamma," in bt_text and "nu," in bt_text
        poisson_text = (out_dir / "params_poisson-lee_matchday20.csv").read_text()
        assert poisson_text.startswith("team,att,def")
        assert "lambda3," in poisson_text


class TestEvaluate:
    def test_trivial_summary_and_reports(self, matches_file, tmp_path, capsys):
        out_dir = tmp_path / "report"
        code = main(
            [
                "evaluate",
                "--matches",
                str(matches_file),
                "--models",
                "trivial",
                "--out",
                str(out_dir),
            ]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "0.6667" in out
        payload = json.loads((out_dir / "report.json").read_text())
        assert set(payload) == {"trivial"}
        assert payload["trivial"]["aggregates"]["n_scored"] == 30
        assert len(payload["trivial"]["per_year"]) == 2
        scores = (out_dir / "scores.csv").read_text().splitlines()
        assert scores[0].startswith("model,season,matchday")
        assert len(scores) == 1 + 30

    def test_byte_identical_reruns(self, matches_file, tmp_path):
        args = [
            "evaluate",
            "--matches",
            str(matches_file),
            "--models",
            "trivial,mn-dir1",
        ]
        main(args + ["--out", str(tmp_path / "a")])
        main(args + ["--out", str(tmp_path / "b")])
        for name in ("report.json", "scores.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_model_spec_continues(self, matches_file, tmp_path, capsys):
        code = main(
            [
                "evaluate",
                "--matches",
                str(matches_file),
                "--models",
                "bogus,trivial",
                "--out",
                str(tmp_path / "r"),
            ]
        )
        assert code == 0
        captured = capsys.readouterr()
        assert "bogus" in captured.err
        assert "failed models" in captured.out


class TestConfig:
    def test_config_file_supplies_defaults(self, matches_file, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"# reproducible run\nmatches={matches_file}\nmodels=trivial\n"
            f"out={tmp_path / 'cfg-out'}\nseed=7\n"
        )
        assert main(["evaluate", "--config", str(cfg)]) == 0
        assert (tmp_path / "cfg-out" / "report.json").exists()

    def test_env_var_fallback(self, matches_file, tmp_path, capsys, monkeypatch):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"matches={matches_file}\nmodels=trivial\nout={tmp_path / 'env-out'}\n")
        monkeypatch.setenv("MATCHCAST_CONFIG", str(cfg))
        assert main(["evaluate"]) == 0
        assert (tmp_path / "env-out" / "report.json").exists()

    def test_flags_override_config(self, matches_file, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"matches={matches_file}\nmodels=mn-dir1\nout={tmp_path / 'x'}\n")
        main(["evaluate", "--config", str(cfg), "--models", "trivial", "--out", str(tmp_path / "y")])
        payload = json.loads((tmp_path / "y" / "report.json").read_text())
        assert set(payload) == {"trivial"}

    def test_engine_settings_parsed(self, tmp_path):
        from matchcast.cli import RunConfig

        cfg = RunConfig(
            raw={
                "bt.tol": "1e-6",
                "bt.max_iter": "100",
                "poisson.window": "last_n_rounds:4",
                "poisson.correlated": "false",
                "mn_dir2.w_grid": "0.2,0.8",
                "mn_dir2.alpha_grid": "1.0,2.0",
            }
        )
        assert cfg.bt_settings().tol == 1e-6
        assert cfg.bt_settings().max_iter == 100
        assert cfg.window().n_rounds == 4
        assert cfg.poisson_correlated() is False
        assert cfg.grid().w_points == (0.2, 0.8)
        assert cfg.grid().alpha_points == (1.0, 2.0)

    def test_poisson_correlated_key_reaches_model(self):
        from matchcast.cli import RunConfig

        cfg = RunConfig(raw={"poisson.correlated": "false"})
        predictor = cfg.build("poisson-biv")
        assert predictor.correlated is False
