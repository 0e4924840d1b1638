import json

import numpy as np
import pytest

from evofda import cli, pipeline, synth
from evofda.ingest import dump_releases
from evofda.pipeline import PipelineConfig, PipelineError, cmd_run, cmd_sensitivity, run_pipeline

SMALL = synth.CorpusSpec(counts={f: 4 for f in synth.FAMILIES}, seed=11)


@pytest.fixture(scope="module")
def small_corpus():
    return synth.generate_corpus(SMALL)


@pytest.fixture
def release_file(tmp_path, small_corpus):
    projects, labels = small_corpus
    path = tmp_path / "releases.csv"
    path.write_text(dump_releases(projects))
    (tmp_path / "truth.csv").write_text(synth.truth_csv(projects, labels))
    return path


# ---- config


def test_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(knots=1).validate()
    with pytest.raises(ValueError):
        PipelineConfig(features="spectra").validate()
    with pytest.raises(ValueError):
        PipelineConfig(k_min=4, k_max=3).validate()
    with pytest.raises(ValueError):
        PipelineConfig(lam=-1.0).validate()
    assert PipelineConfig().validate().knots == 13


def test_config_toml(tmp_path):
    f = tmp_path / "c.toml"
    f.write_text('knots = 6\nfeatures = "fitted_values"\nseed = 4\n')
    cfg = PipelineConfig.from_toml(f)
    assert (cfg.knots, cfg.features, cfg.seed) == (6, "fitted_values", 4)
    f.write_text("colour = 3\n")
    with pytest.raises(ValueError, match="unknown config keys"):
        PipelineConfig.from_toml(f)


def test_provenance_excludes_runtime_keys():
    prov = PipelineConfig(jobs=8, output_dir="x").provenance()
    assert "jobs" not in prov and "output_dir" not in prov
    assert prov["seed"] == 0 and prov["knots"] == 13


# ---- run


def test_bundle_contents(tmp_path, small_corpus):
    projects, labels = small_corpus
    truth = dict(zip((p.project_id for p in projects), labels))
    cfg = PipelineConfig(output_dir=str(tmp_path / "out"))
    res, files = cmd_run(cfg, projects, truth)
    for name in (
        "screening_log.csv", "curves_raw.csv", "curves_standardized.csv", "fits_raw.json",
        "mean_band_raw.csv", "mean_band_raw.svg", "mean_band_standardized.svg",
        "clusters/standardized_k4.json", "clusters/absolute_k2.json", "cluster_membership.csv",
        "cluster_means_k4.svg", "inference_k4.json", "cluster_profile_k3.csv", "report.txt",
        "summary.json", "descriptive_stats.json", "outcomes.csv",
    ):
        assert name in files
    out = tmp_path / "out"
    prov = json.dumps(cfg.provenance(), sort_keys=True, separators=(",", ":"))
    for name in files:
        text = (out / name).read_text()
        if name.endswith(".json"):
            assert json.loads(text)["config"] == cfg.provenance()
        else:
            assert prov in text, name
    inf = json.loads((out / "inference_k4.json").read_text())["data"]
    assert "F" in inf["outcomes"]["univariate"]["percent_change"]
    assert set(inf["descriptors"]["univariate"]) == set(pipeline.DESCRIPTOR_VARS)
    assert res.ari[4] >= 0.9


def test_output_replaced_atomically(tmp_path, small_corpus):
    projects, _ = small_corpus
    out = tmp_path / "out"
    out.mkdir()
    (out / "stale.txt").write_text("old")
    cmd_run(PipelineConfig(output_dir=str(out), k_max=2), projects)
    assert not (out / "stale.txt").exists()
    assert [p.name for p in tmp_path.iterdir()] == ["out"]


def test_failed_run_leaves_nothing(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("project_id,release_date,loc,cplxlcoh\na,2001-01-01,10,1\na,2001-02-30,12,2\n")
    with pytest.raises(PipelineError) as ei:
        cmd_run(PipelineConfig(releases=str(bad), output_dir=str(tmp_path / "out")))
    assert ei.value.stage == "ingest"
    assert "bad.csv" in str(ei.value)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["bad.csv"]


def test_flat_corpus_is_degenerate(tmp_path):
    rows = ["project_id,release_date,loc,cplxlcoh"]
    for i in range(6):
        rows += [f"c{i},2001-01-01,100,50.0", f"c{i},2001-06-01,150,50.0"]
    f = tmp_path / "flat.csv"
    f.write_text("\n".join(rows) + "\n")
    res, _ = cmd_run(PipelineConfig(releases=str(f), output_dir=str(tmp_path / "o")))
    assert np.allclose(res.band_raw.mean, 50.0)
    assert np.allclose(res.band_raw.upper, res.band_raw.lower)
    assert all(s.degenerate for s in res.solutions)


def test_single_project_stops_before_band(tmp_path, sample_history_csv):
    f = tmp_path / "t1.csv"
    f.write_text(sample_history_csv)
    res, files = cmd_run(PipelineConfig(releases=str(f), output_dir=str(tmp_path / "o")))
    assert len(res.kept) == 1
    assert any("n < 2" in n for n in res.notices)
    assert res.band_raw is None and "mean_band_raw.csv" not in files
    assert "curves_raw.csv" in files


def test_k_range_clipped_to_n(small_corpus):
    projects, _ = small_corpus
    res = run_pipeline(PipelineConfig(k_min=2, k_max=5), projects[:3])
    assert [s.k for s in res.solutions] == [2, 3]
    assert any("k limited" in n for n in res.notices)


def test_knot_grid_and_lambda_options(small_corpus):
    projects, _ = small_corpus
    res = run_pipeline(PipelineConfig(fit_grid="knots", lam=50.0, k_max=2), projects)
    assert res.lam == 50.0
    assert res.fits_std[0].grid.size == 15
    assert res.band_std.mean.size == 731


# ---- sensitivity


def test_sensitivity_single_variant_matches_run(small_corpus):
    projects, _ = small_corpus
    cfg = PipelineConfig(sensitivity_k=4)
    v = pipeline.Variant(13, "default", "coefficients", "default")
    rep = pipeline.run_sensitivity(cfg, [v], projects)
    run = run_pipeline(PipelineConfig(k_min=4, k_max=4), projects)
    (entry,) = rep["variants"]
    assert entry["assignment"] == run.solutions[0].assignment()
    assert rep["ari_matrix"]["values"] == [[1.0]]


def test_sensitivity_outputs(tmp_path, small_corpus):
    projects, labels = small_corpus
    variants = pipeline.sensitivity_variants(knots=(6, 13), smoothing=("low", "high"), screening=("default", "min3"))
    rep = cmd_sensitivity(PipelineConfig(output_dir=str(tmp_path / "s")), variants, projects)
    assert len(rep["variants"]) == 16
    vals = np.array(rep["ari_matrix"]["values"])
    assert np.allclose(np.diag(vals), 1.0)
    assert np.allclose(vals, vals.T)
    names = {p.name for p in (tmp_path / "s").iterdir()}
    assert names == {"sensitivity.json", "sensitivity.txt", "sensitivity_ari.csv"}


def test_unknown_variant(small_corpus):
    with pytest.raises(ValueError):
        pipeline.run_sensitivity(PipelineConfig(), [pipeline.Variant(13, "medium", "coefficients", "default")],
                                 small_corpus[0])


# ---- command line


def test_cli_synth_run_sensitivity(tmp_path, capsys):
    corpus = tmp_path / "corpus"
    assert cli.main(["synth", "--seed", "5", "--per-family", "3", "--out", str(corpus)]) == 0
    assert (corpus / "releases.csv").exists() and (corpus / "truth.csv").exists()
    rc = cli.main(["run", "--releases", str(corpus / "releases.csv"), "--truth", str(corpus / "truth.csv"),
                   "--output-dir", str(tmp_path / "run"), "--k-max", "4"])
    assert rc == 0
    assert "ARI vs truth" in capsys.readouterr().out
    rc = cli.main(["sensitivity", "--releases", str(corpus / "releases.csv"), "--output-dir", str(tmp_path / "sens"),
                   "--knot-variants", "6", "--smoothing-variants", "default", "--screening-variants", "default"])
    assert rc == 0
    assert (tmp_path / "sens" / "sensitivity.json").exists()


def test_cli_synth_requires_seed(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["synth", "--out", str(tmp_path)])


def test_cli_ingest_and_env_override(tmp_path, release_file, monkeypatch):
    target = tmp_path / "from_env"
    monkeypatch.setenv(pipeline.OUTPUT_DIR_ENV, str(target))
    assert cli.main(["ingest", "--releases", str(release_file), "--output-dir", str(tmp_path / "ignored")]) == 0
    assert (target / "screening_log.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_cli_config_file_and_flag_precedence(tmp_path, release_file):
    conf = tmp_path / "run.toml"
    conf.write_text(f'releases = "{release_file}"\nknots = 6\nk_max = 3\noutput_dir = "{tmp_path / "o"}"\n')
    assert cli.main(["run", "--config", str(conf), "--k-max", "2"]) == 0
    cfg = json.loads((tmp_path / "o" / "summary.json").read_text())["config"]
    assert (cfg["knots"], cfg["k_max"]) == (6, 2)


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    assert cli.main(["run", "--releases", str(tmp_path / "missing.csv"), "--output-dir", str(tmp_path / "o")]) == 1
    assert "missing.csv" in capsys.readouterr().err
    assert cli.main(["run", "--output-dir", str(tmp_path / "o")]) == 1
    assert cli.main(["run", "--releases", "x.csv", "--knots", "1"]) == 1


def _facts(cpl_targets, loc=100):
    lines = [f"loc {loc}", "class A", "method A.m"]
    lines += [f"ref A.m {t}" for t in cpl_targets]
    return "\n".join(lines) + "\n"


def test_cli_metrics(tmp_path, capsys):
    d = tmp_path / "facts"
    d.mkdir()
    assert cli.main(["metrics", str(d)]) == 0
    assert capsys.readouterr().out == "project_id,release_date,loc,cplxlcoh,cpl,lcoh\n"
    dates = ["2003-01-17", "2003-03-02", "2003-07-16", "2003-08-16", "2003-10-25", "2004-01-04", "2004-02-07"]
    for i, day in enumerate(reversed(dates)):
        (d / f"my_proj_{day}.facts").write_text(_facts(["B", "C"][: i % 3], loc=100 + i))
    assert cli.main(["metrics", str(d)]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert len(rows) == 7
    assert [r.split(",")[1] for r in rows] == dates
    assert all(r.startswith("my_proj,") for r in rows)

    (d / "my_proj_2005-01-01.facts").write_text("class A\nfield A\n")
    assert cli.main(["metrics", str(d)]) == 1
    assert "my_proj_2005-01-01.facts" in capsys.readouterr().err


def test_cli_metrics_output_loads(tmp_path):
    d = tmp_path / "facts"
    d.mkdir()
    (d / "p_2001-01-01.facts").write_text(_facts(["B"]))
    (d / "p_2001-03-01.facts").write_text(_facts(["B", "C"], loc=130))
    out = tmp_path / "rel.csv"
    assert cli.main(["metrics", str(d), "-o", str(out)]) == 0
    (p,) = pipeline.load_projects(out)
    assert [r.loc for r in p.releases] == [100, 130]
