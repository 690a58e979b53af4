import io
import math
import random
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from hypcount.experiment_harness import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    InsufficientRowsError,
    SweepRow,
    cli_main,
    fit_iterated_log_slope,
    read_csv,
    render_svg,
    run_sweep,
    write_csv,
)

BASE = """
[potential]
family = power-law
c = 1.0
delta = 1.0

[boundary]
kind = sphere
n = 1

[sweep]
E_max = 0.2
E_min = 0.05
E_count = 3
bc = {bc}
"""


def _rows(log10s, Es):
    return [SweepRow("power-law", 1.0, 1.0, None, 0.0, 1.0, math.e, 1, "dirichlet", E, l, 1, 1, 10.0, 5)
            for E, l in zip(Es, log10s)]


def _synthetic(slope, intercept, Es, noise=None):
    out = []
    for E in Es:
        ll = slope * math.log(1 / E) + intercept + (noise() if noise else 0.0)
        out.append(math.exp(ll) / math.log(10))  # log10 N = e^{loglog N} / ln 10
    return _rows(out, Es)


def test_config_parses_and_grid_decreases(tmp_path):
    cfg = ExperimentConfig.from_text(BASE.format(bc="both"), tmp_path)
    assert cfg.E_grid == pytest.approx([0.2, 0.1, 0.05])
    assert all(a > b for a, b in zip(cfg.E_grid, cfg.E_grid[1:]))
    assert len(cfg.bcs) == 2


def test_config_rejects_unknown_keys_and_sections(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(BASE.format(bc="dirichlet") + "colour = blue\n", tmp_path)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(BASE.format(bc="dirichlet") + "[plot]\nx = 1\n", tmp_path)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text(BASE.format(bc="dirichlet").replace("E_min = 0.05", "E_min = 0.5"), tmp_path)


def test_sweep_rows_in_order_and_nondecreasing(tmp_path):
    cfg = ExperimentConfig.from_text(BASE.format(bc="dirichlet"), tmp_path)
    rows = run_sweep(cfg, workers=1)
    assert [r.E for r in rows] == pytest.approx([0.2, 0.1, 0.05])
    vals = [r.log10_NE for r in rows]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    # E = 0.2 fixed by the whole-manifold matrix oracle, E = 0.05 by enumeration
    assert vals[0] == -math.inf
    assert vals[2] == pytest.approx(math.log10(791), abs=1e-12)


def test_negative_delta_sweep_is_eventually_constant(tmp_path):
    text = BASE.format(bc="dirichlet").replace("delta = 1.0", "delta = -1.0").replace(
        "E_min = 0.05", "E_min = 1e-6").replace("E_count = 3", "E_count = 6")
    rows = run_sweep(ExperimentConfig.from_text(text, tmp_path))
    assert all(r.log10_NE == -math.inf for r in rows)


def test_determinism_across_worker_counts(tmp_path):
    text = BASE.format(bc="both").replace("E_min = 0.05", "E_min = 0.02").replace("E_count = 3", "E_count = 4")
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    run_sweep(ExperimentConfig.from_text(text + f"\n[output]\ncsv = {a}\n", tmp_path), workers=1)
    run_sweep(ExperimentConfig.from_text(text + f"\n[output]\ncsv = {b}\n", tmp_path), workers=3)
    assert a.read_bytes() == b.read_bytes()


def test_workers_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HYPCOUNT_WORKERS", "2")
    cfg = ExperimentConfig.from_text(BASE.format(bc="dirichlet"), tmp_path)
    assert len(run_sweep(cfg)) == 3
    monkeypatch.setenv("HYPCOUNT_WORKERS", "0")
    with pytest.raises(ValueError):
        run_sweep(cfg)


def test_csv_round_trip(tmp_path):
    cfg = ExperimentConfig.from_text(BASE.format(bc="both"), tmp_path)
    rows = run_sweep(cfg)
    rows.append(SweepRow("critical", 0.35, None, None, 0.0, 1.0, 2.5, 2, "neumann", 1e-9,
                         245.91234, 3, 2, 1.5e3, 77, 12, ("dense-levels-at-breakpoint", "x-y")))
    path = tmp_path / "r.csv"
    write_csv(rows, path)
    assert read_csv(path) == rows
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_per_row_failure_is_recorded(tmp_path, monkeypatch):
    import hypcount.experiment_harness as h

    def boom(*a, **k):
        raise RuntimeError("integrator gave up")

    monkeypatch.setattr(h, "assemble_count", boom)
    rows = run_sweep(ExperimentConfig.from_text(BASE.format(bc="dirichlet"), tmp_path))
    assert len(rows) == 3
    assert all(r.flags and r.flags[0].startswith("error:RuntimeError") for r in rows)


def test_fit_synthetic_exact():
    Es = list(np.geomspace(0.2, 0.01, 6))
    fit = fit_iterated_log_slope(_synthetic(1.0, 0.3, Es), level=2)
    assert fit.slope == pytest.approx(1.0, abs=5e-13)
    assert fit.stderr == pytest.approx(0.0, abs=1e-10)
    assert fit.intercept == pytest.approx(0.3, abs=1e-12)


def test_fit_synthetic_noise():
    rng = random.Random(9)
    Es = list(np.geomspace(0.5, 1e-4, 12))
    fit = fit_iterated_log_slope(_synthetic(0.5, 0.1, Es, lambda: rng.gauss(0, 0.02)), level=2)
    assert abs(fit.slope - 0.5) <= 3 * fit.stderr


def test_fit_drops_undefined_rows_and_needs_four():
    Es = [0.2, 0.1, 0.05, 0.02, 0.01, 0.005]
    rows = _synthetic(1.0, 0.3, Es[2:]) + _rows([-math.inf, 0.0], Es[:2])
    fit = fit_iterated_log_slope(rows, level=2)
    assert fit.dropped == 2 and fit.used == 4
    with pytest.raises(InsufficientRowsError):
        fit_iterated_log_slope(rows[:3], level=2)


def test_fit_level_three():
    # log log log N = 0.5 log log (1/E) + 0.1
    Es = list(np.geomspace(1e-3, 1e-12, 6))
    l10 = [math.exp(math.exp(0.5 * math.log(math.log(1 / E)) + 0.1)) / math.log(10) for E in Es]
    fit = fit_iterated_log_slope(_rows(l10, Es), level=3)
    assert fit.slope == pytest.approx(0.5, abs=1e-9)


def test_svg_three_markers(tmp_path):
    rows = _synthetic(1.0, 0.3, [0.2, 0.1, 0.05])
    path = tmp_path / "p.svg"
    render_svg(rows, path)
    root = ET.parse(path).getroot()
    ns = {"s": "http://www.w3.org/2000/svg"}
    assert len(root.findall(".//s:g[@class='data']/s:circle", ns)) == 3
    labels = {t.get("class"): t.text for t in root.iter("{http://www.w3.org/2000/svg}text") if t.get("class")}
    assert labels["x-label"] == "log(1/E)"
    assert labels["y-label"] == "log(log(N_E))"


def test_svg_empty_rows_error(tmp_path):
    with pytest.raises(ValueError):
        render_svg([], tmp_path / "x.svg")


def test_cli_count_and_csv(tmp_path):
    out = io.StringIO()
    csv_path = tmp_path / "c.csv"
    rc = cli_main(["count", "--family", "power-law", "--c", "1", "--delta", "1", "--n", "1",
                   "--E", "0.2", "--bc", "dirichlet", "--csv", str(csv_path)], out=out)
    assert rc == 0
    assert "N_E = 0" in out.getvalue()
    assert read_csv(csv_path)[0].log10_NE == -math.inf


def test_cli_count_nonzero():
    out = io.StringIO()
    rc = cli_main(["count", "--family", "power-law", "--c", "1", "--delta", "1", "--E", "0.05",
                   "--bc", "both"], out=out)
    assert rc == 0
    assert out.getvalue().count("N_E = 791") == 2


def test_cli_usage_errors():
    err = io.StringIO()
    assert cli_main(["sweep", "definitely-missing.ini"], err=err) == 1
    assert cli_main([], err=err) == 1
    assert cli_main(["count", "--family", "nope", "--c", "1", "--E", "0.1"], err=err) == 1
    assert cli_main(["--workers", "0", "bracketing"], err=err) == 1
    assert "usage error" in err.getvalue()


def test_cli_computation_failure_exit_code():
    # E = 0 is rejected by the certified counter, a computation failure
    rc = cli_main(["count", "--family", "critical", "--c", "1", "--E", "0"], err=io.StringIO(), out=io.StringIO())
    assert rc == 2


def test_cli_sweep(tmp_path):
    cfg = tmp_path / "s.ini"
    cfg.write_text(BASE.format(bc="dirichlet") + "\n[output]\ncsv = out.csv\nsvg = out.svg\n")
    out = io.StringIO()
    assert cli_main(["sweep", str(cfg)], out=out) == 0
    assert (tmp_path / "out.csv").exists()
    assert out.getvalue().startswith("schema,")


def test_cli_oracle_and_bracketing_small():
    assert cli_main(["oracle-check", "--instances", "20", "--seed", "3"], out=io.StringIO()) == 0
    assert cli_main(["bracketing", "--instances", "5"], out=io.StringIO()) == 0


def test_cli_breakpoints():
    out = io.StringIO()
    assert cli_main(["breakpoints", "--family", "critical", "--c", "0.3", "--E", "1e-3", "--bc", "neumann"],
                    out=out) == 0
    assert "Z drops 1 -> 0" in out.getvalue()
