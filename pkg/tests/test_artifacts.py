import csv
import struct

import numpy as np
import pytest

from burgers_levels.artifacts import (MOMENT_COLUMNS, config_from_json, decode_spf1, encode_spf1,
                                      read_field_csv, read_spf1, write_field_csv,
                                      write_moment_table, write_run_directory, write_spf1)
from burgers_levels.errors import ConfigurationError
from burgers_levels.solvers import simulate
from burgers_levels.spectral import SpectralField


def field(tag=None):
    rng = np.random.default_rng(0)
    return SpectralField(rng.normal(size=6) + 1j * rng.normal(size=6), tag)


@pytest.mark.parametrize("tag", [None, 0.25])
def test_spf1_roundtrip(tmp_path, tag):
    f = field(tag)
    write_spf1(tmp_path / "f.spf1", f)
    g = read_spf1(tmp_path / "f.spf1")
    assert np.array_equal(f.coeffs, g.coeffs) and g.time_tag == tag
    data = encode_spf1(f)
    assert data[:4] == b"SPF1"
    (word,) = struct.unpack("<I", data[4:8])
    assert word & 0x7FFFFFFF == 6 and bool(word >> 31) == (tag is not None)


def test_spf1_rejects_bad_payloads():
    data = encode_spf1(field())
    with pytest.raises(ValueError):
        decode_spf1(b"XXXX" + data[4:])
    with pytest.raises(ValueError):
        decode_spf1(data[:-3])


def test_field_csv_roundtrip(tmp_path):
    f = field()
    write_field_csv(tmp_path / "f.csv", f)
    assert np.array_equal(read_field_csv(tmp_path / "f.csv").coeffs, f.coeffs)


def test_moment_table_columns(tmp_path):
    write_moment_table(tmp_path / "m.csv", [{"kind": "ou", "k": 3, "n_samples": 10,
                                             "m2": 0.5, "stderr": 0.01}])
    rows = list(csv.DictReader(open(tmp_path / "m.csv")))
    assert tuple(rows[0]) == MOMENT_COLUMNS and rows[0]["j"] == ""


def test_config_from_json():
    cfg = config_from_json({"alpha": 0.8, "K": 16, "dt": 0.01, "T": 0.1,
                            "u0": {"1": [0.5, 0.0]}, "seed_overrides": {"1": 4}})
    assert cfg.plan.n == 2 and cfg.u0.coeffs[0] == 0.5 and cfg.seed_for(1) == 4
    with pytest.raises(ConfigurationError):
        config_from_json({"alpha": 0.8, "bogus": 1})
    with pytest.raises(ConfigurationError):
        config_from_json({"K": 16})


def test_run_directory_layout(tmp_path):
    cfg = config_from_json({"alpha": 0.6, "K": 8, "dt": 0.01, "T": 0.1, "save_every": 5})
    res = simulate(cfg, "x", [0, 1])
    out = write_run_directory(tmp_path / "run", cfg, res)
    assert (out / "plan.json").exists() and (out / "config.json").exists()
    rows = list(csv.DictReader(open(out / "series.csv")))
    assert len(rows) == 2 * 3
    snap = read_spf1(out / "snapshots" / "X0_s1_m000002.spf1")
    assert np.isclose(snap.time_tag, 0.1)
    assert np.allclose(snap.coeffs, res["fields"]["X0"][2, 1])
