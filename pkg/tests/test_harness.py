import csv
import io

import pytest

from mixbank.harness import (
    TRIAL_FIELDS,
    ConfigError,
    ExperimentConfig,
    config_from_values,
    main,
    run_demo,
    run_experiment,
    summary_from_trials,
    trial_seeds,
)
from mixbank.model import NOISELESS, paper_grid

F = 10e9


def small_cfg(**kw):
    base = dict(
        grid=paper_grid(F),
        trials=3,
        snr_list=(NOISELESS, 10.0),
        channel_subsets=(12, 51),
        master_seed=4,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_config_defaults():
    cfg = ExperimentConfig()
    assert cfg.budget == 12
    assert cfg.grid.n_points == 80000
    assert cfg.problems() == []


@pytest.mark.parametrize(
    "kw",
    [
        dict(channel_subsets=()),
        dict(channel_subsets=(52,)),
        dict(trials=0),
        dict(snr_list=()),
        dict(snr_convention="volts"),
    ],
)
def test_invalid_config_rejected_before_work(kw):
    with pytest.raises(ConfigError):
        run_experiment(small_cfg(**kw))


def test_experiment_outputs_deterministic(tmp_path):
    a = run_experiment(small_cfg(output=str(tmp_path / "a")))
    b = run_experiment(small_cfg(output=str(tmp_path / "b")))
    for name in ("trials.csv", "summary.csv", "manifest.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert a.summary == b.summary


def test_trials_csv_columns_and_summary(tmp_path):
    cfg = small_cfg(output=str(tmp_path))
    res = run_experiment(cfg)
    text = (tmp_path / "trials.csv").read_text()
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0].keys()) == TRIAL_FIELDS
    assert len(rows) == 3 * 2 * 2
    for r in rows:
        assert not (r["exact_match"] == "1" and r["superset_match"] == "0")
    recomputed = summary_from_trials(text)
    for key, (exact, _) in res.summary.items():
        assert recomputed[key] == pytest.approx(exact)
    assert res.grid(cfg).shape == (2, 2)


def test_recovery_uses_selected_rows():
    res = run_experiment(small_cfg(channel_subsets=(12,), snr_list=(NOISELESS,)))
    assert all(r.m_bar == 12 for r in res.records)


def test_seeds_pairwise_distinct():
    seeds = trial_seeds(ExperimentConfig(trials=100))
    assert len(seeds) == len(set(seeds)) == 2500


def test_single_trial_is_all_or_nothing():
    res = run_experiment(small_cfg(trials=1, snr_list=(NOISELESS,), channel_subsets=(51,)))
    assert res.percentage(51, NOISELESS) in (0.0, 100.0)


def test_random_subsets_change_rows():
    cfg = small_cfg(random_subsets=True, trials=1, snr_list=(NOISELESS,))
    from mixbank.harness import channel_subset

    chans = channel_subset(cfg, 0, 12)
    assert len(set(chans)) == 12 and chans != list(range(12))
    run_experiment(cfg)


def test_demo_noiseless():
    report = run_demo(seed=0)
    assert "exact match = True" in report
    err = float(report.split("reconstruction relative error (central half) = ")[1].split()[0])
    assert err < 0.05


def test_demo_zero_signal():
    report = run_demo(seed=0, zero_signal=True)
    assert "estimated support = {}" in report


def test_demo_deterministic(tmp_path):
    assert run_demo(seed=3, snr=20.0) == run_demo(seed=3, snr=20.0)
    run_demo(seed=1, dump_dir=tmp_path)
    assert (tmp_path / "streams.csv").exists()
    header = (tmp_path / "waveform.csv").read_text().splitlines()[0]
    assert header == "t,x,x_hat"


def test_config_from_values():
    cfg = config_from_values({"trials": 7, "snr_list": (5.0, NOISELESS), "grid_points": 4000,
                              "grid_half": 200.0})
    assert cfg.trials == 7
    assert cfg.snr_list == (5.0, NOISELESS)
    assert cfg.grid == paper_grid(F)
    with pytest.raises(ConfigError):
        config_from_values({"bogus": 1})


# ---------------------------------------------------------------- CLI


def test_cli_validate(capsys):
    assert main(["validate"]) == 0
    assert "PASS" in capsys.readouterr().out
    assert main(["validate", "--m", "5", "--channel-subsets", "5"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_cli_experiment_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text(
        "# small sweep\n"
        "trials = 5\n"
        "grid_points = 4000\n"
        "grid_half = 200\n"
        "snr_list = inf\n"
        "channel_subsets = 51\n"
    )
    out = tmp_path / "out"
    assert main(["experiment", "--config", str(conf), "--trials", "2", "--output", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "trials.csv")))
    assert len(rows) == 2
    manifest = (out / "manifest.txt").read_text()
    assert "trials = 2" in manifest
    assert "m_bar" in capsys.readouterr().out


def test_cli_rejects_bad_config(tmp_path, capsys):
    conf = tmp_path / "bad.conf"
    conf.write_text("colour = blue\n")
    assert main(["experiment", "--config", str(conf)]) == 2
    assert main(["experiment", "--channel-subsets", "60", "--trials", "1"]) == 1


def test_cli_demo(capsys):
    assert main(["demo", "--seed", "2", "--grid-points", "4000", "--grid-half", "200"]) == 0
    assert "estimated support" in capsys.readouterr().out
