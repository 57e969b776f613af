"""On-disk formats: SPF1 field snapshots, CSV tables, run directories.

SPF1 layout (little endian): b"SPF1", u32 header whose low 31 bits are K and
whose top bit flags a trailing time tag, K pairs of f64 (re, im) for
k = 1..K, then the optional f64 time tag.
"""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .planner import LevelPlan, plan_schedule
from .spectral import SpectralField, l2_norm_coeffs, sup_norm_coeffs

MAGIC = b"SPF1"
_TIME_FLAG = 1 << 31


def encode_spf1(field: SpectralField) -> bytes:
    K = field.cutoff
    if K >= _TIME_FLAG:
        raise ConfigurationError("cutoff too large for SPF1")
    has_t = field.time_tag is not None
    head = MAGIC + struct.pack("<I", K | (_TIME_FLAG if has_t else 0))
    body = np.asarray(field.coeffs, dtype="<c16").tobytes()
    tail = struct.pack("<d", field.time_tag) if has_t else b""
    return head + body + tail


def decode_spf1(data: bytes) -> SpectralField:
    if data[:4] != MAGIC:
        raise ValueError("not an SPF1 payload")
    (word,) = struct.unpack("<I", data[4:8])
    K = word & ~_TIME_FLAG
    has_t = bool(word & _TIME_FLAG)
    expected = 8 + 16 * K + (8 if has_t else 0)
    if len(data) != expected:
        raise ValueError(f"SPF1 payload has {len(data)} bytes, expected {expected}")
    coeffs = np.frombuffer(data, dtype="<c16", count=K, offset=8).astype(complex)
    t = struct.unpack("<d", data[8 + 16 * K:])[0] if has_t else None
    return SpectralField(coeffs, t)


def write_spf1(path, field: SpectralField):
    Path(path).write_bytes(encode_spf1(field))


def read_spf1(path) -> SpectralField:
    return decode_spf1(Path(path).read_bytes())


def write_field_csv(path, field: SpectralField):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "re", "im"])
        for k, c in enumerate(field.coeffs, 1):
            w.writerow([k, repr(float(c.real)), repr(float(c.imag))])


def read_field_csv(path, time_tag=None) -> SpectralField:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    K = max(int(r["k"]) for r in rows)
    c = np.zeros(K, complex)
    for r in rows:
        c[int(r["k"]) - 1] = complex(float(r["re"]), float(r["im"]))
    return SpectralField(c, time_tag)


MOMENT_COLUMNS = ("kind", "k", "j", "n_samples", "m2", "stderr")


def write_moment_table(path, rows):
    """rows: dicts with the MOMENT_COLUMNS keys (j may be empty for mode rows)."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=MOMENT_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c, "") for c in MOMENT_COLUMNS})


# ---------------------------------------------------------------------------
# run configuration documents
# ---------------------------------------------------------------------------

def _field_from_modes(K, doc):
    if not doc:
        return None
    modes = {int(k): complex(*v) if isinstance(v, (list, tuple)) else complex(v)
             for k, v in doc.items()}
    return SpectralField.from_modes(K, modes)


def config_from_json(doc: dict):
    """Build a SystemConfig from a flat JSON document.

    Keys: alpha (or plan), K, dt, T, seed, u0 / z0 as {k: [re, im]},
    blowup_threshold, noise_scale, coupled, save_every, refine, system,
    split.  Unknown keys are rejected.
    """
    from .solvers import SystemConfig

    known = {"alpha", "plan", "K", "dt", "T", "seed", "u0", "z0", "blowup_threshold",
             "noise_scale", "coupled", "save_every", "refine", "system", "split",
             "samples", "seed_overrides", "direct"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    if "plan" in doc:
        plan = LevelPlan.from_json(dict(doc["plan"], K=None))
    elif "alpha" in doc:
        plan = plan_schedule(float(doc["alpha"]))
    else:
        raise ConfigurationError("config needs 'alpha' or 'plan'")
    K = int(doc.get("K", 64))
    kw = {}
    for key, cast in (("dt", float), ("T", float), ("seed", int), ("blowup_threshold", float),
                      ("noise_scale", float), ("coupled", bool), ("refine", int)):
        if key in doc:
            kw[key] = cast(doc[key])
    if doc.get("save_every") is not None:
        kw["save_every"] = int(doc["save_every"])
    if doc.get("seed_overrides"):
        kw["seed_overrides"] = {int(k): int(v) for k, v in doc["seed_overrides"].items()}
    return SystemConfig(plan, K, u0=_field_from_modes(K, doc.get("u0")),
                        z0=_field_from_modes(K, doc.get("z0")), **kw)


def load_config(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ConfigurationError("config must be a JSON object")
    return doc


def write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# run directories
# ---------------------------------------------------------------------------

def write_run_directory(out_dir, cfg, result: dict, config_doc: dict | None = None):
    """plan.json, config.json, one .spf1 per saved snapshot, series.csv."""
    out = Path(out_dir)
    (out / "snapshots").mkdir(parents=True, exist_ok=True)
    write_json(out / "plan.json", cfg.plan.to_json())
    write_json(out / "config.json", config_doc if config_doc is not None else cfg.to_json())
    times = result["times"]
    fields = result["fields"]
    deaths = result["death_times"]
    names = sorted(fields)
    sample_ids = result["samples"]
    header = ["sample", "time"]
    for name in names:
        header += [f"{name}_l2", f"{name}_sup", f"{name}_dead"]
    rows = []
    for b, s in enumerate(sample_ids):
        for m, t in enumerate(times):
            row = [s, repr(float(t))]
            for name in names:
                c = fields[name][m, b]
                death = deaths.get(name)
                dead = death is not None and not np.isnan(death[b]) and t >= death[b]
                if dead or not np.all(np.isfinite(c)):
                    row += ["nan", "nan", 1]
                    continue
                row += [repr(float(l2_norm_coeffs(c))), repr(float(sup_norm_coeffs(c))), 0]
                write_spf1(out / "snapshots" / f"{name}_s{s}_m{m:06d}.spf1",
                           SpectralField(c, float(t)))
            rows.append(row)
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return out
