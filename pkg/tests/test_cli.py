"""End-to-end tests for the command-line driver.

Each test invokes glmix.cli.main directly with an argv list, captures stdout
through capsys, and works inside a pytest tmp_path.  Numeric expectations
are frozen from probe runs of the same deterministic pipelines (counter-based
RNG keyed by seed and trajectory id), so any drift in the simulator or the
certificate toolkit shows up here as a byte-level diff.
"""

import math
from pathlib import Path

import numpy as np

from glmix.cli import main
from glmix.doeblin import parse_certificate, read_kernel
from glmix.integrator import ode_comparison

KERNEL_FILE = Path(__file__).parent / "data" / "two_state.txt"

SIMULATE_CFG = """\
[model]
n_modes = 4
dt = 0.03125
t_final = 2.0
seed = 11

[ensemble]
ic1 = zero
ic2 = scaled-random:1.0
n_traj = 3
"""

# Default 32-mode model, moderate starts.  Probe run: estimates
# 0.01477 and 0.01364, max ratio 1.083, overlapping intervals.
MOMENTS_UNIFORM_CFG = """\
[ensemble]
ic1 = zero
ic2 = scaled-random:100.0
n_traj = 200
"""

# Smaller model where the two moment estimates separate cleanly: the
# ratio stays under 2 but the confidence intervals are disjoint.
MOMENTS_SPLIT_CFG = """\
[model]
n_modes = 8
dt = 0.015625
t_final = 1.0
seed = 7

[ensemble]
ic1 = zero
ic2 = scaled-random:100.0
n_traj = 150
"""

# Both chains sit at the sampling floor from t = 1 on, so the decay fit
# has no usable window and the rate check must report a failure.
MIXING_FLAT_CFG = """\
[model]
n_modes = 8
dt = 0.015625
t_final = 4.0
seed = 7

[ensemble]
ic1 = zero
ic2 = scaled-random:100.0
n_traj = 60
n_boot = 80
"""


def body_lines(path):
    """Non-comment lines of an output file."""
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def header_lines(path):
    """Comment-block contents of an output file, prefix stripped."""
    out = []
    for line in path.read_text().splitlines():
        if not line.startswith("#"):
            break
        out.append(line[2:] if line.startswith("# ") else line[1:])
    return out


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_odecheck_writes_grid_and_reports_both_verdicts(tmp_path, capsys):
    out = tmp_path / "nested" / "odecheck"
    rc = main(["odecheck", "--out", str(out)])
    text = capsys.readouterr().out
    assert rc == 0
    assert out.is_dir()

    lines = text.splitlines()
    case_lines = [l for l in lines if l.startswith("q = ")]
    assert len(case_lines) == 3
    assert case_lines[0] == (
        "q = 3 c = 1.0 y0 = 10.0 t = 0.5 corrected_holds = 1 literal_holds = 0"
    )
    for l in case_lines:
        assert "corrected_holds = 1" in l
        assert "literal_holds = 0" in l

    csv = out / "odecheck.csv"
    head = header_lines(csv)
    assert head[0] == "glmix odecheck"
    assert "qs = 3 5 7" in head
    rows = body_lines(csv)
    assert rows[0] == (
        "q,c,y0,t,y_final,forcing_integral,corrected_bound,literal_bound,"
        "corrected_holds,literal_holds"
    )
    assert len(rows) == 4
    for row in rows[1:]:
        fields = row.split(",")
        q, c, y0, t = int(fields[0]), float(fields[1]), float(fields[2]), float(fields[3])
        r = ode_comparison(q, c, y0, t)
        assert fields[4] == repr(r.y_final)
        assert fields[5] == repr(r.forcing_integral)
        assert fields[6] == repr(r.corrected_bound)
        assert fields[7] == repr(r.literal_bound)
        assert fields[8] == str(int(r.corrected_holds))
        assert fields[9] == str(int(r.literal_holds))
    # the unforced witness row: literal constant (q c t)^{-1/(q-1)} sits
    # below the true solution while the corrected bound clears it
    witness = rows[1].split(",")
    assert math.isclose(float(witness[7]), 1.5 ** -0.5, rel_tol=1e-12)
    assert float(witness[6]) == 1.0


def test_simulate_row_grid_and_reruns_are_byte_identical(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SIMULATE_CFG)
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    out3 = tmp_path / "c"
    out4 = tmp_path / "d"
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out3),
                 "--threads", "4"]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(out4),
                 "--seed", "99"]) == 0
    capsys.readouterr()

    f1 = (out1 / "trajectories.csv").read_bytes()
    assert (out2 / "trajectories.csv").read_bytes() == f1
    assert (out3 / "trajectories.csv").read_bytes() == f1
    assert (out4 / "trajectories.csv").read_bytes() != f1

    head = header_lines(out1 / "trajectories.csv")
    assert head[0] == "glmix simulate"
    assert "seed = 11" in head
    assert "seed = 99" in header_lines(out4 / "trajectories.csv")

    rows = body_lines(out1 / "trajectories.csv")
    assert rows[0].startswith("trajectory,t,")
    data = [r.split(",") for r in rows[1:]]
    # two initial conditions, three trajectories each, recording grid 0..2
    assert len(data) == 6 * 3
    assert [int(r[0]) for r in data] == sorted(3 * list(range(6)))
    assert [float(r[1]) for r in data[:3]] == [0.0, 1.0, 2.0]
    assert all(r[5] == "0" for r in data)


def test_simulate_output_regenerates_from_recorded_header(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SIMULATE_CFG)
    out1 = tmp_path / "first"
    assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0

    head = header_lines(out1 / "trajectories.csv")
    assert head[0].startswith("glmix ")
    recovered = write_cfg(tmp_path, "\n".join(head[1:]) + "\n", name="recovered.cfg")
    out2 = tmp_path / "second"
    assert main(["simulate", "--config", str(recovered), "--out", str(out2)]) == 0
    capsys.readouterr()

    assert (out2 / "trajectories.csv").read_bytes() == (
        out1 / "trajectories.csv"
    ).read_bytes()


def test_simulate_reports_aborted_trajectories(tmp_path, capsys):
    cfg = write_cfg(
        tmp_path,
        "[model]\nn_modes = 4\ndt = 0.03125\nt_final = 1.0\n"
        "blowup_guard = 1e6\nseed = 11\n\n"
        "[ensemble]\nic1 = 1e8 0 0 0 0 0 0 0 0\nn_traj = 2\n",
    )
    out = tmp_path / "out"
    rc = main(["simulate", "--config", str(cfg), "--out", str(out)])
    text = capsys.readouterr().out
    assert rc == 1
    assert "failure = trajectory_abort" in text
    assert "trajectory = 0" in text
    assert "trajectory = 1" in text
    assert "time = 0.03125" in text
    # the file is still written, with the abort flag set on later rows
    rows = body_lines(out / "trajectories.csv")
    assert any(r.split(",")[5] == "1" for r in rows[1:])


def test_moments_uniform_pair_exits_zero(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MOMENTS_UNIFORM_CFG)
    out = tmp_path / "out"
    rc = main(["moments", "--config", str(cfg), "--out", str(out)])
    text = capsys.readouterr().out
    assert rc == 0
    assert "uniform = 1" in text
    assert "ratio_ok = 1" in text
    assert "ci_overlap_ok = 1" in text
    # frozen from a probe run of this exact config and seed
    assert "max_ratio = 1.0830630740164846" in text
    assert "failure" not in text

    rows = body_lines(out / "moments.csv")
    assert rows[0] == "ic,t,estimate,stderr,n_traj,n_aborted"
    assert len(rows) == 3
    for i, row in enumerate(rows[1:]):
        fields = row.split(",")
        assert fields[0] == str(i)
        assert float(fields[1]) == 1.0
        assert float(fields[2]) > 0.0
        assert fields[4] == "200"
        assert fields[5] == "0"
    summary = body_lines(out / "moments_summary.txt")
    assert "uniform = 1" in summary
    assert "n_traj = 200" in header_lines(out / "moments_summary.txt")


def test_moments_disjoint_intervals_exit_one(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MOMENTS_SPLIT_CFG)
    out = tmp_path / "out"
    rc = main(["moments", "--config", str(cfg), "--out", str(out)])
    text = capsys.readouterr().out
    assert rc == 1
    assert "failure = moment_uniformity" in text
    assert "uniform = 0" in text
    assert "ci_overlap_ok = 0" in text
    # the ratio itself stays inside [1/2, 2]; only the interval test fails
    assert "ratio_ok = 1" in text
    assert (out / "moments.csv").exists()


def test_mixing_flat_distances_report_rate_failure(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MIXING_FLAT_CFG)
    out = tmp_path / "out"
    rc = main(["mixing", "--config", str(cfg), "--out", str(out)])
    text = capsys.readouterr().out
    assert rc == 1
    assert "failure = mixing_rate" in text
    assert "lambda = nan" in text
    assert "identifiable = 0" in text
    assert "ci_method = ols" in text
    floor = float(next(l.split("=")[1] for l in text.splitlines()
                       if l.startswith("floor = ")))
    assert floor > 0.0

    csv_rows = body_lines(out / "mixing.csv")
    assert csv_rows[0] == "t,distance,stderr"
    assert [float(r.split(",")[0]) for r in csv_rows[1:]] == [1.0, 2.0, 3.0, 4.0]
    summary = (out / "mixing_summary.txt").read_text()
    printed = text[: text.index("wrote = ")]
    assert printed == "".join(
        l + "\n" for l in summary.splitlines() if not l.startswith("#")
    )


def test_doeblin_two_state_certificates_and_search(tmp_path, capsys):
    cfg = write_cfg(tmp_path, f"[doeblin]\nkernel = {KERNEL_FILE}\n")
    out = tmp_path / "out"
    rc = main(["doeblin", "--config", str(cfg), "--out", str(out)])
    text = capsys.readouterr().out
    assert rc == 0
    assert "delta_prime = 1.0" in text
    assert "delta = 0.30000000000000004" in text
    assert "nu = 0.6666666666666666 0.3333333333333333" in text
    assert "contraction_factor = 0.49" in text
    assert "search = found" in text
    gap = float(next(l.split("=")[1] for l in text.splitlines()
                     if l.startswith("geometric_gap = ")))
    assert -1e-3 < gap <= 1e-9

    kernel = read_kernel(KERNEL_FILE)
    cert = parse_certificate((out / "certificate.txt").read_text())
    cert.validate(kernel)
    assert cert.delta == 0.30000000000000004
    assert cert.delta_prime == 1.0
    search = parse_certificate((out / "search_certificate.txt").read_text())
    search.validate(kernel)
    assert search.K == (0,)
    assert search.m == 2
    assert search.delta == 0.03125
    assert np.array_equal(search.nu.weights, [1.0, 0.0])


def test_doeblin_without_section_is_a_config_failure(tmp_path, capsys):
    rc = main(["doeblin", "--out", str(tmp_path)])
    text = capsys.readouterr().out
    assert rc == 2
    assert "failure = missing_doeblin_section" in text


def test_config_errors_exit_two_with_line_numbers(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[model]\nn_modes\n")
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    text = capsys.readouterr().out
    assert rc == 2
    assert "error = config" in text
    assert "line 2: expected 'key = value', got 'n_modes'" in text


def test_inadmissible_spectrum_exits_two_naming_the_bound(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "[model]\nbeta = 1.5\n")
    rc = main(["simulate", "--config", str(cfg), "--out", str(tmp_path)])
    text = capsys.readouterr().out
    assert rc == 2
    assert "error = validation" in text
    assert "violation = beta_window" in text
    assert "beta must lie in (alpha - 1/8, alpha]" in text
