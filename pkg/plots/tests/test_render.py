"""The plot component is exercised against CSVs produced by the primary
command-line tool (its only interface), plus schema-violation cases."""

import subprocess
import sys

import pytest

from slowfast_plots import PlotJob, SchemaError, render
from slowfast_plots.cli import main as plot_main


def run_primary(args):
    proc = subprocess.run([sys.executable, "-m", "slowfast.cli"] + args,
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def outputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("primary")
    conv = base / "conv"
    run_primary(["converge", "--model", "example_2_1", "--drift", "cos",
                 "--epsilon", "0.05,0.02,0.01", "--paths", "10",
                 "--horizon", "0.5", "--seed", "3",
                 "--output-dir", str(conv)])
    dens = base / "dens"
    run_primary(["invariant", "--model", "asymmetric_two_well",
                 "--s", "0.1", "--grid-num", "3001",
                 "--output-dir", str(dens)])
    arr = base / "arr"
    run_primary(["spectra", "--model", "quadratic_bowl",
                 "--s-list", "0.6,0.5,0.42", "--ensemble", "200",
                 "--dt", "0.02", "--seed", "4", "--output-dir", str(arr)])
    return {"convergence": conv / "convergence.csv",
            "density": dens / "density.csv",
            "atoms": dens / "atoms.csv",
            "arrhenius": arr / "spectra.csv"}


def test_render_convergence(outputs, tmp_path):
    out = tmp_path / "conv.png"
    render(PlotJob(kind="convergence", inputs=(str(outputs["convergence"]),),
                   output=str(out)))
    assert out.exists() and out.stat().st_size > 2000


def test_render_density_with_atoms(outputs, tmp_path):
    out = tmp_path / "dens.png"
    render(PlotJob(kind="density",
                   inputs=(str(outputs["density"]), str(outputs["atoms"])),
                   output=str(out)))
    assert out.exists() and out.stat().st_size > 2000


def test_render_arrhenius(outputs, tmp_path):
    out = tmp_path / "arr.png"
    render(PlotJob(kind="arrhenius", inputs=(str(outputs["arrhenius"]),),
                   output=str(out)))
    assert out.exists() and out.stat().st_size > 2000


def test_deterministic_output_bytes(outputs, tmp_path):
    a = tmp_path / "a.png"
    b = tmp_path / "b.png"
    for out in (a, b):
        render(PlotJob(kind="convergence",
                       inputs=(str(outputs["convergence"]),),
                       output=str(out)))
    assert a.read_bytes() == b.read_bytes()


def test_schema_error_on_dropped_column(outputs, tmp_path):
    src = outputs["convergence"].read_text().splitlines()
    header = src[1].split(",")
    keep = [i for i, c in enumerate(header) if c != "mean_sup_dist"]
    broken = tmp_path / "broken.csv"
    broken.write_text("\n".join(
        ",".join(line.split(",")[i] for i in keep) if not
        line.startswith("#") else line for line in src) + "\n")
    with pytest.raises(SchemaError, match="mean_sup_dist"):
        render(PlotJob(kind="convergence", inputs=(str(broken),),
                       output=str(tmp_path / "x.png")))


def test_schema_error_on_empty_csv(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(SchemaError, match="empty"):
        render(PlotJob(kind="arrhenius", inputs=(str(empty),),
                       output=str(tmp_path / "x.png")))


def test_cli_exit_codes(outputs, tmp_path):
    ok = plot_main(["--kind", "convergence", "--in",
                    str(outputs["convergence"]), "--out",
                    str(tmp_path / "ok.png")])
    assert ok == 0
    empty = tmp_path / "e.csv"
    empty.write_text("")
    bad = plot_main(["--kind", "convergence", "--in", str(empty),
                     "--out", str(tmp_path / "bad.png")])
    assert bad == 1
    missing_atoms = plot_main(["--kind", "density", "--in",
                               str(outputs["density"]), "--out",
                               str(tmp_path / "d.png")])
    assert missing_atoms == 1


def test_plotjob_validation():
    with pytest.raises(SchemaError):
        PlotJob(kind="surface", inputs=("x.csv",), output="o.png")
    with pytest.raises(SchemaError):
        PlotJob(kind="density", inputs=("only_one.csv",), output="o.png")
