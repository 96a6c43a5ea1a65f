"""End-to-end tests of the command-line interface.

Commands run in-process through cli.main so stdout can be captured and
compared byte-for-byte.
"""

import math
import xml.etree.ElementTree as ET

import pytest

from dirmap import from_text, load_csv
from dirmap.cli import main


def _run(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _synth(capsys, tmp_path, scene="multimodal", seed=7, extra=()):
    out = tmp_path / f"{scene}.csv"
    code, _, _ = _run(
        capsys, "synth", "--scene", scene, "--out", str(out), "--seed", str(seed), *extra
    )
    assert code == 0
    return out


def test_synth_writes_csv_and_truth(capsys, tmp_path):
    out = _synth(capsys, tmp_path)
    truth = tmp_path / "multimodal.truth.csv"
    assert out.exists() and truth.exists()
    records = load_csv(out)
    assert len(records) == 40 * 40  # agents x steps
    header = truth.read_text().splitlines()[0]
    assert header == "segment_id,true_theta"


def test_synth_deterministic_bytes(capsys, tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    a = _synth(capsys, tmp_path / "a", seed=3)
    b = _synth(capsys, tmp_path / "b", seed=3)
    assert a.read_bytes() == b.read_bytes()
    assert (a.parent / "multimodal.truth.csv").read_bytes() == (
        b.parent / "multimodal.truth.csv"
    ).read_bytes()


def test_synth_unknown_scene_exits_2(capsys, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--scene", "nosuch", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_build_unimodal_all_cells_single_lobe(capsys, tmp_path):
    csv = _synth(capsys, tmp_path, scene="unimodal", seed=1)
    out = tmp_path / "map.dgm"
    code, _, err = _run(
        capsys, "build", "--in", str(csv), "--grid", "0,0,10,8,5,4",
        "--mode", "vm", "--out", str(out),
    )
    assert code == 0
    gmap = from_text(out.read_text())
    assert (gmap.spec.n_cols, gmap.spec.n_rows) == (5, 4)
    observed = gmap.observed_cells()
    assert observed
    assert all(c.mixture.n_components == 1 for c in observed)
    assert "cell" in err  # per-cell fitting log on stderr


def test_build_deterministic_bytes(capsys, tmp_path):
    csv = _synth(capsys, tmp_path, seed=2)
    out_a, out_b = tmp_path / "a.dgm", tmp_path / "b.dgm"
    for out in (out_a, out_b):
        code, _, _ = _run(
            capsys, "build", "--in", str(csv), "--grid", "0,0,10,8,5,4",
            "--mode", "vmm", "--out", str(out), "--seed", "5",
        )
        assert code == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_build_bad_csv_exits_3(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("t,track_id,x,y\n0,a,oops,1\n")
    code, _, err = _run(
        capsys, "build", "--in", str(bad), "--grid", "0,0,10,8,5,4",
        "--out", str(tmp_path / "m.dgm"),
    )
    assert code == 3
    assert "line 2" in err


def _build_map(capsys, tmp_path, mode="vmm", scene="multimodal"):
    csv = _synth(capsys, tmp_path, scene=scene, seed=7)
    out = tmp_path / "map.dgm"
    code, _, _ = _run(
        capsys, "build", "--in", str(csv), "--grid", "0,0,10,8,5,4",
        "--mode", mode, "--out", str(out),
    )
    assert code == 0
    return out


def test_query_unobserved_prints_uniform(capsys, tmp_path):
    mapfile = _build_map(capsys, tmp_path)
    code, out, _ = _run(capsys, "query", str(mapfile), "--x", "9.5", "--y", "4.5",
                        "--theta", "0.3")
    assert code == 0
    assert out == "0.1591549431,false\n"


def test_query_matches_library_bit_exactly(capsys, tmp_path):
    mapfile = _build_map(capsys, tmp_path)
    code, out, _ = _run(capsys, "query", str(mapfile), "--x", "1.0", "--y", "1.0",
                        "--theta", "0.2")
    assert code == 0
    gmap = from_text(mapfile.read_text())
    density, observed = gmap.query(1.0, 1.0, 0.2)
    assert out == f"{density:.10f},{'true' if observed else 'false'}\n"


def test_query_modes_bimodal_two_lines(capsys, tmp_path):
    mapfile = _build_map(capsys, tmp_path)
    code, out, _ = _run(capsys, "query", str(mapfile), "--x", "5.0", "--y", "3.0", "--modes")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2
    values = sorted(float(v) for v in lines)
    assert abs(values[0] + math.pi / 2) < 0.2
    assert abs(values[1] - math.pi / 2) < 0.2


def test_query_unreadable_map_exits_3(capsys, tmp_path):
    missing = tmp_path / "nope.dgm"
    code, _, err = _run(capsys, "query", str(missing), "--x", "0", "--y", "0",
                        "--theta", "0")
    assert code == 3
    assert "error" in err


def test_eval_schema_and_determinism(capsys, tmp_path):
    csv = _synth(capsys, tmp_path, seed=9)
    args = ("eval", "--in", str(csv), "--scope", "cell", "--grid", "0,0,10,8,5,4",
            "--seed", "4")
    code_a, out_a, _ = _run(capsys, *args)
    code_b, out_b, _ = _run(capsys, *args)
    assert code_a == code_b == 0
    assert out_a == out_b
    lines = out_a.strip().splitlines()
    assert lines[0] == "method,enll,apd,mse_closest_mode,fit_ms_mean,fit_ms_sd"
    assert lines[1].startswith("DGM-VM,")
    assert lines[2].startswith("DGM-VMM,")
    # timing columns are zeroed unless --timing is passed
    assert lines[1].endswith("0.000,0.000")


def test_eval_ordering_on_multimodal(capsys, tmp_path):
    csv = _synth(capsys, tmp_path, seed=9)
    code, out, _ = _run(capsys, "eval", "--in", str(csv), "--scope", "cell",
                        "--grid", "0,0,10,8,5,4", "--seed", "4")
    assert code == 0
    rows = [line.split(",") for line in out.strip().splitlines()[1:]]
    enll = {row[0]: float(row[1]) for row in rows}
    apd = {row[0]: float(row[2]) for row in rows}
    assert enll["DGM-VMM"] < enll["DGM-VM"]
    assert apd["DGM-VMM"] > apd["DGM-VM"]


def test_eval_too_few_observations_exits_3(capsys, tmp_path):
    csv = tmp_path / "tiny.csv"
    csv.write_text(
        "t,track_id,x,y,theta\n" + "".join(f"{i},a,1,1,0.1\n" for i in range(5))
    )
    code, _, err = _run(capsys, "eval", "--in", str(csv))
    assert code == 3
    assert "observations" in err


def test_plot_svg_well_formed_and_deterministic(capsys, tmp_path):
    mapfile = _build_map(capsys, tmp_path)
    svg_a, svg_b = tmp_path / "a.svg", tmp_path / "b.svg"
    for svg in (svg_a, svg_b):
        code, _, _ = _run(capsys, "plot", str(mapfile), "--out", str(svg))
        assert code == 0
    assert svg_a.read_bytes() == svg_b.read_bytes()
    root = ET.fromstring(svg_a.read_text())
    assert root.tag.endswith("svg")
    polygons = [el for el in root.iter() if el.tag.endswith("polygon")]
    gmap = from_text(mapfile.read_text())
    assert len(polygons) == len(gmap.observed_cells())
    circles = [el for el in root.iter() if el.tag.endswith("circle")]
    assert len(circles) == gmap.spec.n_cells - len(gmap.observed_cells())


def test_config_file_defaults_overridden_by_flags(capsys, tmp_path):
    csv = _synth(capsys, tmp_path, scene="unimodal", seed=5)
    config = tmp_path / "dirmap.cfg"
    config.write_text("mode = vmm\nseed = 11\n")
    out = tmp_path / "cfg.dgm"
    code, _, _ = _run(
        capsys, "build", "--config", str(config), "--in", str(csv),
        "--grid", "0,0,10,8,5,4", "--out", str(out), "--mode", "vm",
    )
    assert code == 0
    # flag wins over config file
    assert from_text(out.read_text()).mode == "vm"
    out2 = tmp_path / "cfg2.dgm"
    code, _, _ = _run(
        capsys, "build", "--config", str(config), "--in", str(csv),
        "--grid", "0,0,10,8,5,4", "--out", str(out2),
    )
    assert code == 0
    assert from_text(out2.read_text()).mode == "vmm"


def test_build_accepts_precomputed_headings(capsys, tmp_path):
    csv = tmp_path / "obs.csv"
    rows = "".join(f"{i},a,1.0,1.0,{0.5 + 0.001 * i}\n" for i in range(60))
    csv.write_text("t,track_id,x,y,theta\n" + rows)
    out = tmp_path / "m.dgm"
    code, _, _ = _run(capsys, "build", "--in", str(csv), "--grid", "0,0,10,8,5,4",
                      "--mode", "vm", "--out", str(out))
    assert code == 0
    gmap = from_text(out.read_text())
    assert gmap.cell_at(0, 0).n_obs == 60


def test_cli_subprocess_smoke(tmp_path):
    import subprocess
    import sys

    out = tmp_path / "s.csv"
    result = subprocess.run(
        [sys.executable, "-m", "dirmap", "synth", "--scene", "kuka_loop",
         "--out", str(out), "--agents", "3", "--steps", "10"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert out.exists()
    assert result.stdout == ""  # data goes to files, logs to stderr
