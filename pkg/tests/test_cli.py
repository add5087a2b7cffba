import pytest

from opfbench.cli import main

from test_netdata import CASE2


def test_validate_clean_case(case_paths, capsys):
    code = main(["validate", case_paths["case3_cycle"]])
    out = capsys.readouterr().out
    assert code == 0
    assert "0 error(s)" in out


def test_validate_missing_file(capsys):
    code = main(["validate", "/nonexistent/case.m"])
    assert code == 2


def test_validate_dangling_reference(tmp_path, capsys):
    text = CASE2.replace(
        "1	0	0	80	-40	1	100	1	200	20;",
        "99	0	0	80	-40	1	100	1	200	20;",
    )
    path = tmp_path / "dangling.m"
    path.write_text(text)
    code = main(["validate", str(path)])
    out = capsys.readouterr().out
    assert code == 2
    assert "dangling-generator-bus" in out


def test_preprocess_reports_points(case_paths, capsys):
    code = main(["preprocess", case_paths["case14_mesh"]])
    out = capsys.readouterr().out
    assert code == 0
    # the colinear interior point of generator 2's curve is merged away
    assert "generator 2: 4 -> 3 points" in out


def test_solve_dc_lambda(case_paths, capsys, tmp_path):
    log_path = tmp_path / "iters.csv"
    code = main([
        "solve", case_paths["case3_cycle"], "--pf", "dc",
        "--cost", "lambda", "--log-iters", str(log_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "status:     optimal" in out
    assert "objective:  3185.00" in out
    log_text = log_path.read_text()
    assert log_text.startswith(
        "iter,mu,primal_inf,dual_inf,compl,alpha_primal,alpha_dual,reg"
    )
    assert len(log_text.splitlines()) > 2


def test_solve_ac_psi(case_paths, capsys):
    code = main([
        "solve", case_paths["case2_line"], "--pf", "ac", "--cost", "psi",
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "gen 0 @bus 1" in out
    assert "bus 2: v=" in out


def test_solve_iteration_limited_exit_code(case_paths, capsys):
    code = main([
        "solve", case_paths["case9_loop"], "--pf", "ac", "--cost", "lambda",
        "--max-iter", "2",
    ])
    assert code == 1


def test_solve_rejects_unknown_pf(case_paths):
    with pytest.raises(SystemExit) as exc:
        main(["solve", case_paths["case2_line"], "--pf", "zz",
              "--cost", "lambda"])
    assert exc.value.code == 2


def test_bench_writes_csv(case_paths, tmp_path, capsys):
    out_path = tmp_path / "report.csv"
    code = main([
        "bench", "--cases", case_paths["case3_cycle"], "--pf", "dc",
        "--cost", "psi,lambda,delta,phi", "--trials", "1",
        "--out", str(out_path),
    ])
    assert code == 0
    text = out_path.read_text()
    assert "case3_cycle" in text
    assert "ratio_psi" in text.splitlines()[1] or "ratio_psi" in text


def test_bench_markdown_to_stdout(case_paths, capsys):
    code = main([
        "bench", "--cases", case_paths["case1_micro"], "--pf", "dc",
        "--trials", "1", "--format", "md",
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("| Case | PF |")


def test_bench_no_match_is_input_error(capsys):
    code = main(["bench", "--cases", "/nonexistent/*.m"])
    assert code == 2
