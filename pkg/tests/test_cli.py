import csv
import math

import pytest

from lpwa_ucb.cli import (
    SERIES_HEADER,
    SUMMARY_HEADER,
    VALIDATE_HEADER,
    ScenarioParseError,
    builtin_scenarios,
    cmd_analytic,
    cmd_simulate,
    cmd_validate_approx,
    main,
    parse_scenario,
)
from lpwa_ucb.model import ConfigError, ScenarioConfig, Strategy

SCENARIO1 = ScenarioConfig(
    n_devices=1000, n_channels=4, tx_prob=1e-3, max_attempts=5, backoff_window=5,
    occupancy=(0.1, 0.3, 0.3, 0.3), horizon=200_000,
)


def write(tmp_path, text, name="s.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_builtin_scenarios():
    assert builtin_scenarios() == ["scenario1", "scenario2"]
    assert parse_scenario("scenario1") == SCENARIO1
    s2 = parse_scenario("scenario2")
    assert (s2.n_devices, s2.backoff_window, s2.occupancy) == (2000, 10, (0.4, 0.3, 0.2, 0.1))


def test_parse_wrong_occupancy_length(tmp_path):
    path = write(tmp_path, "n_devices: 10\nn_channels: 2\ntx_prob: 0.01\nmax_attempts: 3\n"
                           "backoff_window: 4\noccupancy: [0.1]\n")
    with pytest.raises(ConfigError, match="occupancy length"):
        parse_scenario(path)


def test_parse_unknown_key(tmp_path):
    path = write(tmp_path, "n_devices: 10\nspeed: 3\n")
    with pytest.raises(ScenarioParseError, match="speed"):
        parse_scenario(path)


def test_parse_syntax_error_has_line(tmp_path):
    path = write(tmp_path, "n_devices: 10\noccupancy: [0.1, 0.2\nhorizon: 5\n")
    with pytest.raises(ScenarioParseError, match="line"):
        parse_scenario(path)


def test_parse_missing_key(tmp_path):
    path = write(tmp_path, "n_devices: 10\n")
    with pytest.raises(ScenarioParseError, match="missing"):
        parse_scenario(path)


def test_parse_types(tmp_path):
    path = write(tmp_path, "n_devices: 10\nn_channels: 2\ntx_prob: 1e-2\nmax_attempts: 3\n"
                           "backoff_window: 4\noccupancy: [0, 0.2]\nhorizon: 2e3\n"
                           "strategy: KUcbRetrans\ndelay_threshold: 100\nfreeze_channel: false\n")
    cfg = parse_scenario(path)
    assert cfg.tx_prob == 0.01 and cfg.horizon == 2000
    assert cfg.strategy is Strategy.K_UCB_RETRANS and cfg.delay == 100


def test_parse_rejects_fractional_integer(tmp_path):
    path = write(tmp_path, "n_devices: 10.5\nn_channels: 1\ntx_prob: 0.1\nmax_attempts: 3\n"
                           "backoff_window: 4\noccupancy: [0]\n")
    with pytest.raises(ScenarioParseError, match="n_devices"):
        parse_scenario(path)


def small_scenario(tmp_path):
    return write(tmp_path, "n_devices: 60\nn_channels: 4\ntx_prob: 0.01\nmax_attempts: 5\n"
                           "backoff_window: 5\noccupancy: [0.1, 0.3, 0.3, 0.3]\nhorizon: 3000\n"
                           "replications: 3\ndelay_threshold: 300\n", "small.yaml")


def test_simulate_writes_all_strategies(tmp_path):
    out = tmp_path / "out"
    cmd_simulate(small_scenario(tmp_path), out, window=500, gnuplot=True)
    for strategy in Strategy:
        rows = read_csv(out / f"series_{strategy.slug}.csv")
        assert rows[0] == SERIES_HEADER
        assert len(rows) == 1 + 6
        assert all(r[1] == strategy.value and r[4] == "3" for r in rows[1:])
        assert all(0 <= float(r[2]) <= 1 for r in rows[1:])
        assert read_csv(out / f"cumulative_{strategy.slug}.csv")[0] == SERIES_HEADER
        assert (out / f"series_{strategy.slug}.dat").read_text().startswith("# slot_bucket")
    summary = read_csv(out / "summary.csv")
    assert summary[0] == SUMMARY_HEADER
    assert [r[0] for r in summary[1:]] == [s.value for s in Strategy]


def snapshot(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir())}


def test_simulate_byte_identical_across_runs_and_workers(tmp_path):
    scen = small_scenario(tmp_path)
    strategies = [Strategy.ONLY_UCB, Strategy.K_UCB_RETRANS]
    cmd_simulate(scen, tmp_path / "a", seed=5, reps=3, strategies=strategies, window=500)
    cmd_simulate(scen, tmp_path / "b", seed=5, reps=3, strategies=strategies, window=500)
    cmd_simulate(scen, tmp_path / "c", seed=5, reps=3, strategies=strategies, window=500, workers=2)
    a = snapshot(tmp_path / "a")
    assert a == snapshot(tmp_path / "b") == snapshot(tmp_path / "c")
    cmd_simulate(scen, tmp_path / "d", seed=6, reps=3, strategies=strategies, window=500)
    assert a != snapshot(tmp_path / "d")


def test_simulate_rewrites_outputs(tmp_path):
    scen = small_scenario(tmp_path)
    out = tmp_path / "o"
    cmd_simulate(scen, out, reps=2, strategies=[Strategy.RANDOM_RETRANS], window=1000)
    first = snapshot(out)
    cmd_simulate(scen, out, reps=2, strategies=[Strategy.RANDOM_RETRANS], window=1000)
    assert snapshot(out) == first


def test_simulate_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--config", str(small_scenario(tmp_path)), "--out", str(blocker / "sub")]) != 0


def test_validate_approx_small(tmp_path):
    rows = cmd_validate_approx([30, 60], tmp_path, reps=2, horizon=20_000, tx_prob=2e-3)
    table = read_csv(tmp_path / "validate_approx.csv")
    assert table[0] == VALIDATE_HEADER
    assert [int(r[0]) for r in table[1:]] == [30, 60]
    for n, pc, pc1, approx, err in rows:
        assert 0 < pc < pc1 < 1
        assert err == pytest.approx(abs(pc1 - approx))


def test_validate_approx_rejects_bad_n():
    with pytest.raises(ConfigError):
        cmd_validate_approx([1], None, reps=1, horizon=100)


def test_analytic_table():
    table = cmd_analytic(0.1, 100, 10)
    assert set(table) == {"x", "p_ca_exact", "p_ca_closed", "p_ca_difference", "p_c1_approx", "gap"}
    assert abs(table["p_ca_difference"]) <= 0.02
    table = cmd_analytic(0.2, 100, 1)
    assert table["p_ca_closed"] == pytest.approx(1.0) and table["p_c1_approx"] == pytest.approx(1.0)


def test_main_analytic(capsys):
    assert main(["analytic", "--pc", "0.1", "--n", "100", "--m", "10"]) == 0
    out = capsys.readouterr().out
    assert "p_ca_exact" in out and "p_c1_approx" in out


def test_main_analytic_domain_error(capsys):
    assert main(["analytic", "--pc", "0", "--n", "100", "--m", "10"]) != 0
    assert "p_c" in capsys.readouterr().err


def test_main_bad_config_exit_code(tmp_path, capsys):
    path = write(tmp_path, "n_devices: 10\nspeed: 3\n")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) != 0
    assert "speed" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.yaml")]) != 0


def test_main_simulate_and_validate(tmp_path, capsys):
    scen = small_scenario(tmp_path)
    assert main(["simulate", "--config", str(scen), "--out", str(tmp_path / "s"), "--reps", "1",
                 "--strategies", "Only UCB,no UCB", "--window", "1000", "--delay", "10"]) == 0
    assert sorted(p.name for p in (tmp_path / "s").iterdir()) == [
        "cumulative_no_ucb.csv", "cumulative_only_ucb.csv", "series_no_ucb.csv",
        "series_only_ucb.csv", "summary.csv"]
    assert main(["validate-approx", "--n", "40", "--reps", "1", "--horizon", "20000",
                 "--tx-prob", "0.002", "--out", str(tmp_path / "v")]) == 0
    assert (tmp_path / "v" / "validate_approx.csv").exists()
    assert "pc1_approx" in capsys.readouterr().out
