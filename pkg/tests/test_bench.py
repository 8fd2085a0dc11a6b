from onmapf.bench import main

MAP_1X2 = "height 1\nwidth 2\nmap\n..\n"
SCEN_SINGLE = "1 0 0 0 0 1\n"
CNF_SAT2 = "p cnf 2 3\n1 2 0\n-1 2 0\n1 -2 0\n"
CNF_UNSAT1 = "p cnf 1 3\n1 0\n1 0\n-1 0\n"


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_solve_line_sequence(capsys):
    assert main(["solve", "--family", "line", "--m", "4", "--policy", "sequence"]) == 0
    out = capsys.readouterr().out
    assert "flowtime 34, makespan 16, latency 18" in out


def test_solve_opt_rational_new(capsys):
    rc = main(["solve", "--family", "line", "--m", "4", "--policy", "opt-rational",
               "--mode", "new", "--objective", "flowtime"])
    assert rc == 0
    assert "flowtime 34" in capsys.readouterr().out


def test_solve_single_agent_map(tmp_path, capsys):
    map_path = write(tmp_path, "empty1x2.map", MAP_1X2)
    scen_path = write(tmp_path, "single.scen", SCEN_SINGLE)
    rc = main(["solve", "--map", map_path, "--scen", scen_path, "--policy", "sequence"])
    assert rc == 0
    assert "flowtime 1, makespan 1, latency 0" in capsys.readouterr().out


def test_solve_writes_byte_stable_reports(tmp_path, capsys):
    contents = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        rc = main(["solve", "--family", "line", "--m", "4", "--policy", "sequence",
                   "--out", str(out_dir)])
        assert rc == 0
        contents.append(
            tuple((out_dir / f).read_bytes() for f in ("plan.csv", "report.csv", "steps.csv"))
        )
    assert contents[0] == contents[1]
    report = (tmp_path / "a" / "report.csv").read_text().splitlines()
    assert report[0].startswith("policy,mode,objective,agents,flowtime")
    assert ",34,16,18,0," in report[1]


def test_ratio_line_sequence_flowtime(capsys):
    rc = main(["ratio", "--family", "line", "--m", "4", "--policy", "sequence",
               "--objective", "flowtime"])
    assert rc == 0
    assert "34/25 = 1.36" in capsys.readouterr().out


def test_ratio_2x2_makespan_and_latency(capsys):
    rc = main(["ratio", "--family", "2x2-adversary", "--policy", "opt-rational",
               "--mode", "all", "--objective", "makespan"])
    assert rc == 0
    assert "3/2 = 1.5" in capsys.readouterr().out
    rc = main(["ratio", "--family", "2x2-adversary", "--policy", "opt-rational",
               "--mode", "all", "--objective", "latency"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "1/0 = inf (additive gap 1)" in out


def test_ratio_oracle_guard(tmp_path, capsys):
    rc = main(["ratio", "--family", "grid-random", "--m", "6", "--seed", "1",
               "--objective", "flowtime"])
    assert rc == 2  # 6 agents on an 8x8 grid: refused without --force
    assert "use --force" in capsys.readouterr().err


def test_ratio_forced_oracle_never_below_one(capsys):
    rc = main(["ratio", "--family", "grid-random", "--m", "3", "--seed", "0",
               "--objective", "flowtime", "--force"])
    assert rc == 0
    ratio_line = [l for l in capsys.readouterr().out.splitlines() if "ratio:" in l][0]
    alg, opt = (int(x) for x in ratio_line.split()[2].split("/"))
    assert alg >= opt > 0  # the oracle is a true lower bound


def test_sweep_values_and_monotone_check(capsys):
    rc = main(["sweep", "--m-list", "2,4,6",
               "--policies", "sequence,opt-rational:new-single:flowtime"])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0] == "m,policy,flowtime,makespan,ratio_flow,ratio_make"
    seq = [line for line in lines if line.startswith(("2,sequence", "4,sequence", "6,sequence"))]
    assert [line.split(",")[4] for line in seq] == ["1.0", "1.36", "1.85"]
    opt = [line for line in lines if "opt-rational(new-single:flowtime)" in line]
    # forced into the very same behavior as the naive baseline
    assert [line.split(",")[2:] for line in opt] == [line.split(",")[2:] for line in seq]
    assert "monotone-ratio-check: ok" in out


def test_sweep_empty_policy_list(capsys):
    assert main(["sweep", "--m-list", "2,4", "--policies", ""]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "m,policy,flowtime,makespan,ratio_flow,ratio_make"
    assert len([line for line in out.splitlines() if line and "," in line]) == 1


def test_reduce_sat_roundtrip(tmp_path, capsys):
    cnf = write(tmp_path, "sat2.cnf", CNF_SAT2)
    out_dir = tmp_path / "red"
    assert main(["reduce-sat", "--cnf", cnf, "--out", str(out_dir)]) == 0
    out = capsys.readouterr().out
    assert "agents 7" in out and "distance-3-audit: ok" in out
    for name in ("graph.txt", "agents.scen", "labels.txt"):
        assert (out_dir / name).exists()
    labels = (out_dir / "labels.txt").read_text().splitlines()
    assert labels[0].split() == ["0", "v_1"]
    # the emitted files are themselves a solvable instance
    rc = main(["solve", "--graph", str(out_dir / "graph.txt"),
               "--scen", str(out_dir / "agents.scen"),
               "--policy", "opt-rational", "--mode", "new", "--objective", "makespan"])
    assert rc == 0
    assert "makespan 3" in capsys.readouterr().out


def test_reduce_sat_rejects_bad_occurrences(tmp_path, capsys):
    cnf = write(tmp_path, "bad.cnf", "p cnf 2 2\n1 2 0\n-1 -2 0\n")
    assert main(["reduce-sat", "--cnf", cnf, "--out", str(tmp_path / "x")]) == 2
    assert "occurs 2 times" in capsys.readouterr().err


def test_validate_exit_codes(tmp_path, capsys):
    good_map = write(tmp_path, "good.map", MAP_1X2)
    scen = write(tmp_path, "good.scen", SCEN_SINGLE)
    assert main(["validate", "--map", good_map, "--scen", scen]) == 0

    bad_map = write(tmp_path, "bad.map", "height 1\nwidth 2\nmap\n.@@\n")
    assert main(["validate", "--map", bad_map]) == 2  # row length mismatch parses wrong
    capsys.readouterr()

    split_map = write(tmp_path, "split.map", "height 1\nwidth 3\nmap\n.@.\n")
    assert main(["validate", "--map", split_map]) == 1  # parses, but disconnected
    assert "validation failure" in capsys.readouterr().err


def test_config_errors(capsys):
    assert main(["solve", "--family", "line"]) == 2  # missing --m
    assert main(["solve", "--family", "line", "--m", "3"]) == 2  # odd m
    assert main(["solve", "--family", "line", "--m", "2", "--map", "x"]) == 2
    assert main(["solve"]) == 2  # no source at all
    capsys.readouterr()


def test_solve_budget_exhaustion_is_validation_failure(capsys):
    rc = main(["solve", "--family", "line", "--m", "4", "--policy", "opt-rational",
               "--mode", "new", "--objective", "flowtime", "--node-budget", "2"])
    assert rc == 1
    assert "validation failure" in capsys.readouterr().err


def test_custom_irrational_replays_the_optimum(capsys):
    rc = main(["solve", "--family", "line", "--m", "4", "--policy", "custom-irrational",
               "--objective", "flowtime"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "flowtime 25, makespan 11" in out
    assert "rational at every step: NO" in out
    rc = main(["solve", "--family", "line", "--m", "4", "--policy", "custom-irrational",
               "--objective", "flowtime", "--rationalize"])
    assert rc == 0
    assert "rational at every step: yes" in capsys.readouterr().out


def test_custom_irrational_unavailable_against_adversary(capsys):
    rc = main(["solve", "--family", "2x2-adversary", "--policy", "custom-irrational"])
    assert rc == 2
    assert "adaptive" in capsys.readouterr().err
