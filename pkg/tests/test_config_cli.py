import math
from dataclasses import replace

import pytest

from nomasim.channel import FadingModel
from nomasim.cli import main, outage_table, run_scenario
from nomasim.config import ConfigError, parse_config, preset
from nomasim.outage import estimate_outage
from nomasim.report import LOG_FLOOR, OUTAGE_HEADER, AxesSpec, CsvTable, read_csv, render_svg
from nomasim.rng import RngStream

MINIMAL = """
scenario = "outage_sweep"
seed = 7

[outage_sweep]
snr_db = [0, 10, 20]
trials_per_point = 2000
rates = [1.0, 0.5]
"""

DOWNLINK = """
scenario = "downlink_plan"
seed = 1

[downlink_plan]
power_budget = 50.0

[[downlink_plan.sensors]]
gain = 0.3
payload_bits = 100
blocklength = 200
error_prob = 1e-5

[[downlink_plan.sensors]]
gain = 9.0
payload_bits = 100
blocklength = 200
error_prob = 1e-5

[[downlink_plan.broadbands]]
gain = 1.0
rate = 2.0
"""


def _write(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_minimal_config_parses():
    cfg = parse_config(MINIMAL)
    assert cfg.scenario == "outage_sweep" and cfg.seed == 7
    assert cfg.body.trials_per_point == 2000
    assert cfg.body.policies == ["csi_based", "qos_based", "hybrid"]
    assert cfg.body.fading == [FadingModel(), FadingModel()]


def test_zero_trials_rejected():
    with pytest.raises(ConfigError, match=r"outage_sweep\.trials_per_point.*trials >= 1"):
        parse_config(MINIMAL.replace("2000", "0"))


def test_unknown_key_named():
    with pytest.raises(ConfigError, match="turbo"):
        parse_config(MINIMAL.replace("rates =", "turbo = true\nrates ="))
    with pytest.raises(ConfigError, match="turbo"):
        parse_config("turbo = true\n" + MINIMAL)


def test_parse_error_reports_line():
    broken = MINIMAL.replace("seed = 7", "seed = = 7")
    with pytest.raises(ConfigError, match="line 3"):
        parse_config(broken)


@pytest.mark.parametrize("old, new", [
    ("snr_db = [0, 10, 20]", "snr_db = [10, 0]"),
    ("rates = [1.0, 0.5]", "rates = [1.0]"),
    ('scenario = "outage_sweep"', 'scenario = "fig9"'),
    ("seed = 7", "seed = -1"),
    ("trials_per_point = 2000", "trials_per_point = 2.5"),
])
def test_validation_errors(old, new):
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace(old, new))


def test_presets_parse():
    fig2, fig3 = preset("fig2_style"), preset("fig3_style")
    assert fig2.body.policies == ["csi_based", "qos_based", "hybrid"]
    assert fig3.body.orbs == 10
    assert fig3.body.variants == ["plain", "power_pool", "power_pool_acb", "gb_only"]
    with pytest.raises(ConfigError):
        preset("fig4_style")


def test_outage_rows_match_direct_estimate():
    cfg = preset("fig2_style")
    cfg = replace(cfg, body=replace(cfg.body, snr_db=[0.0, 30.0], trials_per_point=5000))
    table = outage_table(cfg, workers=2)
    assert len(table.rows) == 3 * 2 * 2
    direct = estimate_outage("hybrid", [2.0, 0.4], [1000.0, 1000.0], FadingModel(), 5000, RngStream(2021, 1))
    row = next(r for r in table.records() if r["policy"] == "hybrid" and r["user"] == "secondary"
               and r["snr_db"] == 30.0)
    assert row["p_hat"] == direct.secondary.p_hat
    assert row["trials"] == 5000


def test_run_scenario_is_byte_identical(tmp_path):
    cfg = parse_config(MINIMAL)
    a = run_scenario(cfg, str(tmp_path / "a"), workers=1)
    b = run_scenario(cfg, str(tmp_path / "b"), workers=4)
    assert [p.rsplit("/", 1)[1] for p in a] == ["outage_sweep_outage.csv", "outage_sweep_outage.svg"]
    for pa, pb in zip(a, b):
        assert open(pa, "rb").read() == open(pb, "rb").read()


def test_downlink_plan_written(tmp_path):
    [path] = run_scenario(parse_config(DOWNLINK), str(tmp_path))
    table = read_csv(open(path).read())
    statuses = table.column("status")
    assert statuses == ["admitted", "unpaired_sensor"]


def test_csv_round_trip():
    table = CsvTable(OUTAGE_HEADER)
    table.add("s", "hybrid", "primary", 12.5, 1 / 3, 0.0, 2e-7, 1000)
    back = read_csv(table.to_csv())
    row = back.rows[0]
    assert row[:4] == ["s", "hybrid", "primary", 12.5]
    assert row[4] == float(f"{1 / 3:.6g}") and row[6] == 2e-7 and row[7] == 1000


def test_csv_uses_six_significant_digits():
    table = CsvTable(("x",))
    table.add(math.pi)
    assert table.to_csv() == "x\n3.14159\n"


def _outage_table(*p_hats):
    table = CsvTable(OUTAGE_HEADER)
    for i, p in enumerate(p_hats):
        table.add("s", "qos_based", "primary", 10.0 * i, p, p, p, 10)
    return table


AXES = AxesSpec("snr_db", "p_hat", ("policy", "user"), log_y=True)


def test_svg_single_row_has_one_marker():
    svg = render_svg(_outage_table(0.5), AXES)
    assert svg.count("<circle") == 1 and "<polyline" not in svg
    assert svg.startswith("<?xml") and 'version="1.1"' in svg


def test_svg_log_axis_clamps_zero():
    svg = render_svg(_outage_table(0.1, 0.0), AXES)
    assert f"zero estimates drawn at {LOG_FLOOR:g}" in svg
    assert svg.count("<polyline") == 1


def test_svg_is_deterministic():
    assert render_svg(_outage_table(0.3, 0.01), AXES) == render_svg(_outage_table(0.3, 0.01), AXES)


def test_svg_rejects_empty_table():
    with pytest.raises(ValueError):
        render_svg(CsvTable(OUTAGE_HEADER), AXES)


def test_cli_success(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL)
    assert main(["run", "--config", path, "--out", str(tmp_path / "out"), "--seed", "3", "--workers", "2"]) == 0
    assert "outage_sweep_outage.csv" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    path = _write(tmp_path, MINIMAL.replace("2000", "0"))
    assert main(["run", "--config", path]) == 2
    assert "trials >= 1" in capsys.readouterr().err


def test_cli_missing_config_exit_code(tmp_path):
    assert main(["run", "--config", str(tmp_path / "absent.toml")]) == 2


def test_cli_bad_seed_exit_code(tmp_path):
    assert main(["run", "--config", _write(tmp_path, MINIMAL), "--seed", "-4"]) == 2


def test_cli_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "--config", _write(tmp_path, MINIMAL), "--out", str(blocker / "sub")]) == 3
