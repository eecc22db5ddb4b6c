#!/usr/bin/env python3
"""End-to-end checks of the convlab CLI: exit codes, CSV layout, schema, determinism."""
import csv
import io
import json
import math
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

CLI = sys.argv[1]
SCHEMA = json.loads(Path(sys.argv[2]).read_text())
failures = []


def run(*args, **kw):
    return subprocess.run([CLI, *args], capture_output=True, text=True, timeout=600, **kw)


def check(name, ok, detail=""):
    print(("ok   " if ok else "FAIL ") + name + (f"  ({detail})" if detail and not ok else ""))
    if not ok:
        failures.append(name)


def write_config(tmp, name, cfg):
    path = Path(tmp) / name
    path.write_text(json.dumps(cfg))
    return str(path)


def canonical(path):
    doc = json.loads(Path(path).read_text())
    doc.pop("timestamp", None)
    doc.pop("wall_time_s", None)
    return json.dumps(doc, sort_keys=True)


with tempfile.TemporaryDirectory() as tmp:
    cfg = write_config(tmp, "unknown.json", {"model": "sphereX", "points": [[0.5, 0.5]]})
    r = run("analyze", "--config", cfg)
    check("unknown model exits 2", r.returncode == 2, f"rc={r.returncode}")
    check("unknown model is named", "sphereX" in r.stderr, r.stderr.strip())

    cfg = write_config(tmp, "badbound.json", {"model": "euclidean", "points": [[0, 0]], "bound": -1})
    r = run("analyze", "--config", cfg)
    check("negative bound exits 2", r.returncode == 2, f"rc={r.returncode}")

    cfg = write_config(tmp, "badparams.json", {"model": {"name": "sphere", "params": {"radius": -2}}, "points": [[1, 1]]})
    r = run("analyze", "--config", cfg)
    check("bad model params exit 2", r.returncode == 2, f"rc={r.returncode}")

    r = run("analyze")
    check("missing --config exits 2", r.returncode == 2, f"rc={r.returncode}")

    csv_out = Path(tmp) / "torus.csv"
    cfg = write_config(tmp, "torus_grid.json", {
        "model": "flat_torus", "grid": {"n": 5}, "bound": 2, "seed": 7,
        "outputs": [{"path": str(csv_out)}]})
    r = run("analyze", "--config", cfg)
    check("torus grid analyze exits 0", r.returncode == 0, r.stderr.strip())
    rows = list(csv.DictReader(io.StringIO(csv_out.read_text()))) if csv_out.exists() else []
    check("torus grid has 25 rows", len(rows) == 25, f"rows={len(rows)}")
    for key, expected in (("i", 0.5), ("c", 0.25), ("sc", 0.25)):
        vals = [float(row[key]) for row in rows]
        hws = [float(row[key + "_halfwidth"]) for row in rows]
        bad = [v for v, h in zip(vals, hws) if abs(v - expected) > h + 1e-3]
        check(f"torus {key} is {expected} at every grid point", rows and not bad, f"off: {bad[:3]}")

    json_a = Path(tmp) / "a.json"
    json_b = Path(tmp) / "b.json"
    sph = {"model": "sphere", "points": [[1.0, 0.5]], "bound": 4, "seed": 3,
           "analyses": {"conditions": ["A", "B"], "ball_radii": [1.0, math.pi / 2], "cut_directions": 2}}
    cfg = write_config(tmp, "sphere.json", sph)
    ra = run("analyze", "--config", cfg, "--out", str(json_a))
    rb = run("analyze", "--config", cfg, "--out", str(json_b))
    check("sphere analyze exits 0", ra.returncode == 0 and rb.returncode == 0, ra.stderr.strip())
    if json_a.exists():
        doc = json.loads(json_a.read_text())
        errors = list(jsonschema.Draft202012Validator(SCHEMA).iter_errors(doc))
        check("sphere report matches the schema", not errors, errors[0].message[:200] if errors else "")
        cond_b = [c for c in doc["points"][0]["conditions"] if c["condition"] == "B"]
        check("sphere condition B fails", cond_b and cond_b[0]["status"] == "fails")
        balls = {round(b["r"], 6): b["verdict"] for b in doc["points"][0]["balls"]}
        check("sphere ball r=1 strongly convex", balls.get(1.0) == "strongly_convex", str(balls))
        check("sphere ball r=pi/2 properly convex only",
              balls.get(round(math.pi / 2, 6)) == "properly_convex_only", str(balls))
    if json_a.exists() and json_b.exists():
        check("repeated analyze is byte-identical after dropping timing",
              canonical(json_a) == canonical(json_b))

    r = run("cutlocus", "--model", "flat_torus", "--point", "0.1,0.2", "--n-dirs", "4", "--bound", "2")
    check("cutlocus exits 0", r.returncode == 0, r.stderr.strip())
    cut_rows = list(csv.DictReader(io.StringIO(r.stdout)))
    check("cutlocus emits one row per direction", len(cut_rows) == 4, f"rows={len(cut_rows)}")
    check("cutlocus points are ordinary",
          cut_rows and all(row["classification"] == "ordinary" for row in cut_rows))

    r = run("cutlocus", "--model", "sphere", "--point", "1.0", "--n-dirs", "2")
    check("cutlocus with a short point exits 2", r.returncode == 2, f"rc={r.returncode}")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
