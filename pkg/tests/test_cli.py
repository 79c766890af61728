from __future__ import annotations

import csv
import io
import json

import pytest

from mdimkit.cli import (
    EXIT_FAIL,
    EXIT_INCONCLUSIVE,
    EXIT_OK,
    EXIT_RESOLUTION,
    EXIT_UNSUPPORTED,
    FIXTURE_COLUMNS,
    ORACLE_COLUMNS,
    SCHEMA_VERSION,
    SWEEP_COLUMNS,
    TABLE_COLUMNS,
    main,
    oracle_query,
    parse_grid,
    parse_horizons,
    parse_ladder,
)
from mdimkit.errors import UnsupportedParameterError

MANIFEST_KEYS = {"command", "fixtures", "ladder", "horizons", "grid", "seed", "version",
                 "wall_clock", "digests", "schema_version"}


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


def csv_rows(text):
    reader = csv.DictReader(io.StringIO(text))
    return reader.fieldnames, list(reader)


# ---------------------------------------------------------------- parsing


def test_parse_ladder_power_range():
    assert parse_ladder("2^-2..2^-4") == (0.25, 0.125, 0.0625)


def test_parse_ladder_fractions_sorted():
    assert parse_ladder("1/648, 1/72") == (1 / 72, 1 / 648)


@pytest.mark.parametrize("text", ["", "0.1,-0.2", "0"])
def test_parse_ladder_rejects(text):
    with pytest.raises(ValueError):
        parse_ladder(text)


def test_parse_horizons():
    assert parse_horizons("1..4") == (1, 2, 3, 4)
    assert parse_horizons("4,1,2") == (1, 2, 4)
    with pytest.raises(ValueError):
        parse_horizons("0..3")


def test_parse_grid_empty():
    assert parse_grid("") == ()
    assert parse_grid("0.5, 1/3") == (0.5, 1 / 3)


# ---------------------------------------------------------------- oracle


def test_oracle_kakeya_cover_count(capsys):
    code, payload = run_json(capsys, "oracle", "shift:kakeya_A", "N", "--eps", "0.1")
    assert code == EXIT_OK
    # balls around 0 (reaching 1/5), 1/4 (reaching 1/3), 1/2 and 1
    assert payload["data"]["bounds"][0]["value"] == "4"


def test_oracle_phi_a_cover(capsys):
    code, payload = run_json(capsys, "oracle", "phi_a:1/2", "cov", "--n", "2", "--k", "3")
    assert code == EXIT_OK
    values = {bound["kind"]: bound["value"] for bound in payload["data"]["bounds"]}
    assert values == {"lower": "729", "upper": "72171"}


def test_oracle_interval_shift_separated(capsys):
    code, payload = run_json(capsys, "oracle", "shift:interval", "sep", "--eps", "0.25",
                             "--n", "3")
    assert code == EXIT_OK
    assert payload["data"]["bounds"][0]["value"] == "125"


def test_oracle_csv_header(capsys):
    code, out, _ = run(capsys, "oracle", "cat_power:3", "fix", "--n", "2", "--format", "csv")
    header, rows = csv_rows(out)
    assert code == EXIT_OK
    assert tuple(header) == ORACLE_COLUMNS
    assert rows[0]["value"] == "5"


def test_oracle_missing_argument():
    with pytest.raises(UnsupportedParameterError, match="--eps"):
        oracle_query("shift:kakeya_A", "N")


def test_oracle_unsupported_query(capsys):
    code, _, err = run(capsys, "oracle", "tent", "sep", "--n", "2")
    assert code == EXIT_UNSUPPORTED
    assert "no oracle" in err


# ---------------------------------------------------------------- estimate


def test_estimate_json_schema(capsys):
    code, payload = run_json(capsys, "estimate", "constant")
    assert code == EXIT_OK
    assert set(payload) == {"manifest", "data"}
    assert set(payload["manifest"]) == MANIFEST_KEYS
    assert payload["manifest"]["schema_version"] == SCHEMA_VERSION
    assert payload["manifest"]["digests"]["data"].startswith("sha256:")
    data = payload["data"]
    assert {"fixture", "report", "tables", "horizons", "invariant_violations",
            "chain_violations"} <= set(data)
    assert data["report"]["estimate"] == pytest.approx(0.0, abs=1e-12)
    assert set(data["tables"][0]) == set(TABLE_COLUMNS)


def test_estimate_csv_and_manifest_sidecar(capsys, tmp_path):
    out = tmp_path / "table.csv"
    code, _, _ = run(capsys, "estimate", "identity", "--format", "csv", "--out", str(out))
    assert code == EXIT_OK
    header, rows = csv_rows(out.read_text())
    assert tuple(header) == TABLE_COLUMNS and rows
    sidecar = json.loads((tmp_path / "table.csv.manifest.json").read_text())
    assert sidecar["data_file"] == "table.csv"
    assert set(sidecar) == MANIFEST_KEYS | {"data_file"}


def test_estimate_digest_is_reproducible(capsys):
    first = run_json(capsys, "estimate", "tent", "--horizons", "1..4")[1]
    second = run_json(capsys, "estimate", "tent", "--horizons", "1..4")[1]
    assert first["manifest"]["digests"] == second["manifest"]["digests"]
    assert first["data"] == second["data"]


def test_estimate_infinite_values_serialise_as_null(capsys):
    code, payload = run_json(capsys, "estimate", "cat_power:3")
    report = payload["data"]["report"]
    assert code == EXIT_OK
    assert report["infinite"] is True and report["estimate"] is None
    assert payload["data"]["known_infinite"] is True


def test_estimate_coarse_net_factor(capsys):
    code, _, err = run(capsys, "estimate", "tent", "--grid", "0.3")
    assert code == EXIT_RESOLUTION
    assert "ResolutionError" in err


def test_estimate_horizons_beyond_budget(capsys):
    code, _, err = run(capsys, "estimate", "tent", "--horizons", "40..45")
    assert code == EXIT_RESOLUTION
    assert "budget" in err


def test_estimate_unknown_fixture(capsys):
    code, _, err = run(capsys, "estimate", "no_such_system")
    assert code == EXIT_UNSUPPORTED
    assert "UnknownFixtureError" in err


# ---------------------------------------------------------------- check


def test_check_pass_exit(capsys):
    code, payload = run_json(capsys, "check", "power_inequality", "constant", "--p", "2")
    assert code == EXIT_OK
    assert payload["data"]["verdict"] == "pass"
    assert payload["data"]["finite_scale_surrogate"] is True


def test_check_fail_exit(capsys):
    code, payload = run_json(capsys, "check", "nonwandering", "damped:tent", "--tol", "0.1")
    assert code == EXIT_FAIL
    assert payload["data"]["verdict"] == "fail"


def test_check_inconclusive_exit(capsys):
    code, payload = run_json(capsys, "check", "power_inequality", "tent", "--p", "2",
                             "--horizons", "1..3")
    assert code == EXIT_INCONCLUSIVE
    assert "InsufficientDataError" in payload["data"]["detail"]


def test_check_precondition_exit(capsys):
    code, _, _ = run(capsys, "check", "composition_commute", "identity", "tent")
    assert code == EXIT_UNSUPPORTED


def test_check_csv_columns(capsys):
    code, out, _ = run(capsys, "check", "box_bound", "tent", "--format", "csv")
    header, rows = csv_rows(out)
    assert code == EXIT_OK
    assert header == ["relation", "verdict", "left_value", "right_value", "tolerance", "detail"]
    assert rows[0]["verdict"] == "pass"


# ---------------------------------------------------------------- sweep and config


def test_empty_sweep_is_header_only(capsys):
    code, out, _ = run(capsys, "sweep", "phi_a", "--grid", "", "--format", "csv")
    assert code == EXIT_OK
    assert out == ",".join(SWEEP_COLUMNS) + "\n"


def test_sweep_depth_on_kakeya(capsys):
    code, payload = run_json(capsys, "sweep", "shift:kakeya_A", "--param", "depth",
                             "--grid", "4,6")
    rows = payload["data"]["rows"]
    assert code == EXIT_OK
    assert [row["status"] for row in rows] == ["ok", "ok"]
    assert set(rows[0]) == set(SWEEP_COLUMNS)


def test_sweep_depth_too_small(capsys):
    code, payload = run_json(capsys, "sweep", "shift:kakeya_A", "--param", "depth", "--grid", "2")
    assert code == EXIT_UNSUPPORTED
    assert payload["data"]["rows"][0]["status"] == "UnsupportedParameterError"


def test_config_fills_unset_flags(capsys, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("horizons = 1..4\nseed = 7\nformat = json\n")
    _, payload = run_json(capsys, "estimate", "constant", "--config", str(config))
    assert payload["manifest"]["horizons"] == [1, 2, 3, 4]
    assert payload["manifest"]["seed"] == 7


def test_flags_win_over_config(capsys, tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("seed = 7\nhorizons = 1..4\n")
    _, payload = run_json(capsys, "estimate", "constant", "--config", str(config),
                          "--seed", "3", "--horizons", "1..5")
    assert payload["manifest"]["seed"] == 3
    assert payload["manifest"]["horizons"] == [1, 2, 3, 4, 5]


def test_config_unknown_key(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text("colour = blue\n")
    with pytest.raises(SystemExit) as excinfo:
        main(["fixtures", "--config", str(config)])
    assert excinfo.value.code == 2


# ---------------------------------------------------------------- fixtures


def test_fixture_listing(capsys):
    code, out, _ = run(capsys, "fixtures", "--format", "csv")
    header, rows = csv_rows(out)
    assert code == EXIT_OK
    assert tuple(header) == FIXTURE_COLUMNS
    ids = {row["id"] for row in rows}
    assert {"tent", "example33", "cat_power:<trace>"} <= ids
    template = next(row for row in rows if row["id"] == "cat_power:<trace>")
    assert template["template"] == "True" and template["known_mdim"] == ""
