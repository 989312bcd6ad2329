import io

import numpy as np
import pytest

from dscopula import (
    CSVFormatError,
    ChainConfig,
    ExperimentConfig,
    MarginPair,
    PriorSpec,
    QuadratureSpec,
    ReferenceCopula,
    bayes_estimate,
    deheuvels_estimate,
    pseudo_observations,
    run_mise_study,
    write_sample_csv,
)
from dscopula.cli import main, read_sample_csv


@pytest.fixture
def sample_csv(tmp_path, rng):
    model = ReferenceCopula("gaussian", 0.5)
    data = model.sample(30, rng)
    path = tmp_path / "sample.csv"
    with open(path, "w", encoding="utf-8") as fh:
        write_sample_csv(data, fh)
    return path, data


def _write(tmp_path, text, name="in.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_read_sample_csv_with_header(tmp_path):
    path = _write(tmp_path, "x,y\n0.1,0.2\n0.3,0.4\n")
    assert np.array_equal(read_sample_csv(path), [[0.1, 0.2], [0.3, 0.4]])


def test_read_sample_csv_without_header(tmp_path):
    path = _write(tmp_path, "1.5,-2\n")
    assert np.array_equal(read_sample_csv(path), [[1.5, -2.0]])


def test_read_sample_csv_skips_blank_lines(tmp_path):
    path = _write(tmp_path, "x,y\n\n0.1,0.2\n\n")
    assert read_sample_csv(path).shape == (1, 2)


def test_read_sample_csv_reports_line_numbers(tmp_path):
    with pytest.raises(CSVFormatError) as err:
        read_sample_csv(_write(tmp_path, "0.1,0.2\n0.3,0.4,0.5\n"))
    assert err.value.line_number == 2
    with pytest.raises(CSVFormatError) as err:
        read_sample_csv(_write(tmp_path, "x,y\n0.1,0.2\n0.3,oops\n"))
    assert err.value.line_number == 3
    with pytest.raises(CSVFormatError) as err:
        read_sample_csv(_write(tmp_path, "0.1,inf\n"))
    assert err.value.line_number == 1
    with pytest.raises(CSVFormatError) as err:
        read_sample_csv(_write(tmp_path, "x,y\n"))
    assert err.value.line_number == 1
    with pytest.raises(CSVFormatError):
        read_sample_csv(_write(tmp_path, ""))


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    assert main(["estimate"]) == 1
    assert main(["estimate", "--input", "x.csv", "--estimator", "oracle"]) == 1
    assert main(["mise-study", "--rhos", "0.5,2.0"]) == 1
    assert main(["mise-study", "--margins", "unknown"]) == 1
    capsys.readouterr()


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert main(["estimate", "--help"]) == 0
    capsys.readouterr()


def test_runtime_errors_exit_two(tmp_path, capsys):
    missing = tmp_path / "missing.csv"
    assert main(["estimate", "--input", str(missing)]) == 2
    assert "error:" in capsys.readouterr().err


def test_estimate_deheuvels_matches_library(tmp_path, sample_csv):
    path, data = sample_csv
    out = tmp_path / "grid.csv"
    code = main(
        ["estimate", "--input", str(path), "--estimator", "deheuvels",
         "--grid", "10", "--output", str(out)]
    )
    assert code == 0
    buf = io.StringIO()
    deheuvels_estimate(read_sample_csv(path)).grid(10).write_csv(buf)
    assert out.read_text(encoding="utf-8") == buf.getvalue()


def test_estimate_bayes_matches_library(tmp_path, sample_csv):
    path, _ = sample_csv
    out = tmp_path / "grid.csv"
    code = main(
        ["estimate", "--input", str(path), "--estimator", "bayes", "--m", "3",
         "--length", "300", "--burn-in", "50", "--grid", "8",
         "--output", str(out)]
    )
    assert code == 0
    ps = pseudo_observations(read_sample_csv(path))
    prior = PriorSpec("jeffreys", 3)
    config = ChainConfig(m=3, prior=prior, T=300, burn_in=50, seed=0, thin=10)
    buf = io.StringIO()
    bayes_estimate(ps, prior, config).grid(8).write_csv(buf)
    assert out.read_text(encoding="utf-8") == buf.getvalue()


def test_estimate_grid_header_to_stdout(sample_csv, capsys):
    path, _ = sample_csv
    assert main(
        ["estimate", "--input", str(path), "--estimator", "kernel", "--grid", "4"]
    ) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "u,v,value"
    assert len(lines) == 1 + 25


def test_estimate_known_margins(tmp_path, sample_csv):
    path, _ = sample_csv
    out = tmp_path / "grid.csv"
    code = main(
        ["estimate", "--input", str(path), "--estimator", "mle", "--m", "3",
         "--margins", "uniform,uniform", "--grid", "6", "--output", str(out)]
    )
    assert code == 0
    assert out.read_text(encoding="utf-8").startswith("u,v,value\n")


def test_prior_sample_trace_and_states(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    states = tmp_path / "states.csv"
    code = main(
        ["prior-sample", "--m", "3", "--length", "50", "--burn-in", "10",
         "--thin", "5", "--output", str(trace), "--states", str(states)]
    )
    assert code == 0
    trace_lines = trace.read_text(encoding="utf-8").strip().splitlines()
    assert trace_lines[0] == "sweep,radius,log_posterior,accept_rate"
    assert len(trace_lines) == 51
    state_lines = states.read_text(encoding="utf-8").strip().splitlines()
    assert state_lines[0].split(",")[:3] == ["p_1_1", "p_1_2", "p_1_3"]
    assert len(state_lines[0].split(",")) == 9
    assert len(state_lines) == 1 + (50 - 10 + 5 - 1) // 5


def test_prior_sample_states_need_thinning(tmp_path, capsys):
    code = main(
        ["prior-sample", "--m", "3", "--length", "50", "--burn-in", "10",
         "--thin", "0", "--output", "-", "--states", str(tmp_path / "s.csv")]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_ball_prob_command(tmp_path, capsys):
    envelope = tmp_path / "env.csv"
    code = main(
        ["ball-prob", "--m", "2", "--length", "100", "--burn-in", "10",
         "--chains", "2", "--envelope", str(envelope)]
    )
    assert code == 0
    # order 2: the inscribed ball is the whole polytope
    assert capsys.readouterr().out.strip() == "1"
    lines = envelope.read_text(encoding="utf-8").strip().splitlines()
    assert lines[0] == "iteration,min,mean,max"
    assert len(lines) == 101


def test_radius_density_command(tmp_path, capsys):
    samples = tmp_path / "samples.csv"
    density = tmp_path / "density.csv"
    code = main(
        ["radius-density", "--m", "3", "--length", "200", "--burn-in", "50",
         "--samples", str(samples), "--density", str(density),
         "--grid-points", "64"]
    )
    assert code == 0
    q95 = float(capsys.readouterr().out.strip())
    assert 0.0 < q95 < np.sqrt(2.0)
    assert len(samples.read_text(encoding="utf-8").strip().splitlines()) == 151
    density_lines = density.read_text(encoding="utf-8").strip().splitlines()
    assert density_lines[0] == "radius,density"
    assert len(density_lines) == 65


def test_mise_study_matches_library(tmp_path):
    out = tmp_path / "mise.csv"
    code = main(
        ["mise-study", "--family", "cross", "--rhos", "0.5", "--n", "10",
         "--replications", "2", "--estimators", "deheuvels,truth",
         "--output", str(out), "--seed", "9"]
    )
    assert code == 0
    config = ExperimentConfig(
        model=ReferenceCopula("cross", 0.5),
        margins=MarginPair(),
        margin_mode="unknown",
        n=10,
        replications=2,
        m=6,
        estimators=("deheuvels", "truth"),
        chain=None,
        quadrature=QuadratureSpec(),
        master_seed=9,
        rhos=(0.5,),
    )
    buf = io.StringIO()
    run_mise_study(config).write_csv(buf)
    assert out.read_text(encoding="utf-8") == buf.getvalue()


def test_mise_study_reports_failures(tmp_path, capsys):
    out = tmp_path / "mise.csv"
    # n = 1 breaks the kernel estimator (it needs two points); failures are
    # reported on stderr but do not fail the run
    code = main(
        ["mise-study", "--family", "gaussian", "--rhos", "0.3", "--n", "1",
         "--replications", "2", "--estimators", "kernel,deheuvels",
         "--output", str(out)]
    )
    assert code == 0
    err = capsys.readouterr().err
    assert "failed: rho=0.3 replication=0 kernel: ValueError" in err
    assert "replication=1" in err
    rows = out.read_text(encoding="utf-8").strip().splitlines()
    kernel_row = next(r for r in rows if ",kernel," in r)
    assert kernel_row.endswith(",nan,nan,0")


def test_validate_command_fast(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    lines = [line for line in out.strip().splitlines() if line]
    assert len(lines) >= 8
    assert all(line.startswith("PASS") for line in lines)
