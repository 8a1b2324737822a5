import pytest

from ebdevs.cli import main


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "seg.ini"
    path.write_text(
        "[experiment]\nmodel = segregation\nrealisations = 2\nt_end = 2\n"
        f"out_dir = {tmp_path / 'out'}\nsweep = HT: 0.2, 0.9\n\n[params]\nN = 100\n"
    )
    return path


def test_run_ignores_sweep(config, tmp_path):
    assert main(["run", str(config)]) == 0
    assert len(list((tmp_path / "out").glob("*_r*.csv"))) == 2


def test_sweep_with_override(config, tmp_path):
    assert main(["sweep", str(config), "--realisations", "3", "--side", "12"]) == 0
    assert len(list((tmp_path / "out").glob("*_r*.csv"))) == 6


def test_sweep_needs_a_sweep(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\nmodel = network\n")
    assert main(["sweep", str(path)]) == 2


def test_bad_parameter_exit_code(config):
    assert main(["run", str(config), "--HT", "3"]) == 2
    assert main(["run", str(config), "--colour", "3"]) == 2


def test_trace_and_plot(config, tmp_path):
    log = tmp_path / "trace.log"
    assert main(["trace", str(config), "-o", str(log), "--t-end", "1"]) == 0
    first = log.read_text().splitlines()[0].split("\t")
    assert first[2] in ("INT", "EXT") and first[3] in ("0", "1")
    assert main(["run", str(config)]) == 0
    csvs = sorted(str(p) for p in (tmp_path / "out").glob("*_aggregate.csv"))
    svg = tmp_path / "p.svg"
    assert main(["plot", *csvs, "-o", str(svg)]) == 0
    assert svg.read_text().startswith("<svg")
    assert main(["plot", str(tmp_path / "missing.csv"), "-o", str(svg)]) == 2
