import io
import math

import numpy as np
import pytest

from gossipeig import cli, community, harness, model as gm, oja, orth
from gossipeig.errors import InvalidParametersError
from gossipeig.linalg import sym_eigen
from gossipeig.rng import SplitMix64, derive_trial_seed


def small_config(**overrides):
    base = dict(
        model="weighted", n=16, p=2.0, q=1.0, k=2,
        eta=0.01, t_oja=2000, t_orth=2000, trials=3, base_seed=7,
    )
    base.update(overrides)
    return harness.ExperimentConfig(**base)


# --- run_trial -----------------------------------------------------------------


def test_trial_reports_are_byte_identical():
    config = small_config()
    a = harness.run_trial(config, 12345)
    b = harness.run_trial(config, 12345)
    row_a = harness._report_row(0, 0, config, a)
    row_b = harness._report_row(0, 0, config, b)
    assert row_a == row_b


def test_trial_without_iteration_rounds_gives_random_labels():
    # t_oja = 0: labels are signs of an orthogonalized Gaussian, so the
    # flip-minimized misclassification is at most n/2, with mean near
    # n/2 - sqrt(n/(2 pi)) (documented 4-sigma band for 20 seeds: [43, 50])
    config = harness.ExperimentConfig(
        model="weighted", n=100, p=2.0, q=1.0, k=2,
        eta=0.01, t_oja=0, t_orth=20_000, trials=1, base_seed=0,
    )
    scores = []
    for i in range(20):
        rep = harness.run_trial(config, derive_trial_seed(0, i))
        assert rep.misclass_before <= 50
        scores.append(rep.misclass_before)
    assert 43.0 <= np.mean(scores) <= 50.0


def test_failed_sbm_trial_is_marked_not_raised():
    config = harness.ExperimentConfig(
        model="sbm", n=4, p=1e-9, q=5e-10, k=2,
        eta=0.01, t_oja=10, t_orth=10, trials=1, base_seed=0,
    )
    statuses = {harness.run_trial(config, seed).status for seed in range(50)}
    assert harness.STATUS_DEGENERATE in statuses


def test_infeasible_cleanup_is_marked_in_report():
    config = harness.ExperimentConfig(
        model="sbm", n=8, p=0.5, q=0.25, k=2,
        eta=0.02, t_oja=500, t_orth=500, trials=1, base_seed=0,
        cleanup=True,
    )
    rep = harness.run_trial(config, 3)
    assert rep.status == harness.STATUS_INFEASIBLE_CLEANUP
    assert math.isfinite(rep.misclass_before)
    assert math.isnan(rep.misclass_after_cleanup)


def test_derived_schedule_weighted_closed_form():
    config = harness.ExperimentConfig(
        model="weighted", n=16, p=2.0, q=1.0, k=2,
        eps=0.5, delta=0.5,
        constants=__import__("gossipeig.params", fromlist=["ScheduleConstants"]).ScheduleConstants(
            c1=1.0, c2=1e-4, c3=0.01
        ),
        trials=1, base_seed=0,
    )
    rep = harness.run_trial(config, 1)
    assert rep.status == harness.STATUS_OK
    assert rep.t_oja > 0 and rep.t_orth > 0 and rep.eta > 0


def test_derived_schedule_sbm_measured_bounds():
    from gossipeig.params import ScheduleConstants

    config = harness.ExperimentConfig(
        model="sbm", n=8, p=0.9, q=0.3, k=2,
        eps=0.5, delta=0.5, constants=ScheduleConstants(c1=1.0, c2=1e-4, c3=1e-3),
        trials=1, base_seed=0,
    )
    rep = harness.run_trial(config, 5)
    assert rep.status == harness.STATUS_OK
    assert rep.rounds_used == rep.t_oja + rep.t_orth


def test_cleanup_rounds_counted_in_report():
    config = small_config(cleanup=True, cleanup_phases=2, cleanup_rounds=100)
    rep = harness.run_trial(config, 11)
    assert rep.rounds_used == 2000 + 2000 + 200
    assert math.isfinite(rep.misclass_after_cleanup)


# --- subspace error --------------------------------------------------------------


def test_subspace_error_top_eigenvectors():
    rng = SplitMix64(1)
    a = rng.uniforms(36).reshape(6, 6) * 2.0 - 1.0
    m = 0.5 * (a + a.T)
    eig = sym_eigen(m)
    assert harness.subspace_error(eig.vectors[:, :2], m) <= 1e-10


def test_subspace_error_bottom_eigenvector():
    m = np.diag([3.0, 2.0, 1.0])
    eig = sym_eigen(m)
    assert abs(harness.subspace_error(eig.vectors[:, -1], m) - 1.0) <= 1e-10


def test_subspace_error_direct_expansion():
    m = np.diag([3.0, 2.0, 1.0])
    v = np.array([0.6, 0.64, math.sqrt(1.0 - 0.36 - 0.4096)])
    # eigenvectors of the diagonal matrix are the basis vectors, so the
    # bottom-2 projection is just the last two squared components
    assert harness.subspace_error(v, m) == pytest.approx(v[1] ** 2 + v[2] ** 2, abs=1e-12)


# --- sweep ------------------------------------------------------------------------


def test_sweep_row_count_and_header():
    buf = io.StringIO()
    harness.run_sweep([small_config()], 1, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == ",".join(harness.CSV_COLUMNS)
    assert len(lines) == 1 + 3


def test_sweep_bytes_reproducible():
    a, b = io.StringIO(), io.StringIO()
    harness.run_sweep([small_config()], 1, a)
    harness.run_sweep([small_config()], 1, b)
    assert a.getvalue() == b.getvalue()


def test_sweep_parallelism_does_not_change_output():
    a, b = io.StringIO(), io.StringIO()
    harness.run_sweep([small_config(trials=4)], 1, a)
    harness.run_sweep([small_config(trials=4)], 8, b)
    assert a.getvalue() == b.getvalue()


def test_sweep_summary_written():
    csv_fp, sum_fp = io.StringIO(), io.StringIO()
    harness.run_sweep([small_config()], 1, csv_fp, sum_fp)
    lines = sum_fp.getvalue().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("config,model,n,trials,ok")
    assert lines[1].startswith("0,weighted,16,3,3")


def test_parallelism_env_override(monkeypatch):
    monkeypatch.setenv(harness.PARALLELISM_ENV_VAR, "3")
    assert harness.resolve_parallelism(1) == 3
    monkeypatch.delenv(harness.PARALLELISM_ENV_VAR)
    assert harness.resolve_parallelism(5) == 5
    assert harness.resolve_parallelism(None) == 1


# --- invariants --------------------------------------------------------------------


def test_local_rounds_concentrate():
    # expected per-node interactions = 2 * total / n; 4-sigma-ish cap of twice that
    config = harness.ExperimentConfig(
        model="weighted", n=200, p=2.0, q=1.0, k=2,
        eta=0.005, t_oja=15_000, t_orth=5_000, trials=1, base_seed=0,
    )
    total = 20_000
    for i in range(20):
        rep = harness.run_trial(config, derive_trial_seed(1, i))
        assert rep.local_rounds_max <= 4 * total / 200


def test_top_eigenvector_is_easier_than_second():
    config = harness.ExperimentConfig(
        model="weighted", n=64, p=2.0, q=1.0, k=2,
        eta=0.005, t_oja=20_000, t_orth=20_000, trials=1, base_seed=0,
    )
    a1, a2 = [], []
    for i in range(10):
        rep = harness.run_trial(config, derive_trial_seed(2, i))
        a1.append(rep.alignment_1)
        a2.append(rep.alignment_2)
    assert np.median(a1) >= np.median(a2)


def test_report_invariance_under_relabeling():
    edges = [(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (5, 7), (1, 4)]
    n, k, eta = 8, 2, 0.05
    perm = np.array([3, 0, 6, 1, 7, 2, 5, 4])
    m_a = gm.graph_model(edges, n)
    m_b = gm.graph_model([(int(perm[u]), int(perm[v])) for u, v in edges], n)
    truth_a = gm.planted_truth(n)
    chi_b = np.empty(n, dtype=np.int64)
    chi_b[perm] = truth_a.chi
    truth_b = gm.GroundTruth(chi_b)

    rng = SplitMix64(1234)
    q0 = oja.init_states(n, k, rng)
    us1, vs1 = gm.sample_events(m_a, 4000, rng)
    us2, vs2 = gm.sample_events(m_a, 4000, rng)

    def pipeline(q_init, us_a, vs_a, us_b, vs_b, comm_model, truth):
        q = q_init.copy()
        oja.run_asynch_oja_on_events(q, us_a, vs_a, eta)
        state = orth.init_orth_state(q)
        orth.apply_orth_events(state, us_b, vs_b)
        vhat, _ = orth.finalize_all(state, n)
        eig = sym_eigen(gm.communication_matrix(comm_model))
        labels = community.assign_labels(vhat[:, 1])
        return vhat, {
            "a1": abs(float(vhat[:, 0] @ eig.vectors[:, 0])),
            "a2": abs(float(vhat[:, 1] @ eig.vectors[:, 1])),
            "norm2": float(np.sqrt(np.sum(vhat[:, 1] ** 2))),
            "sub": harness.subspace_error(vhat, gm.communication_matrix(comm_model)),
            "mis": community.misclassification(labels, truth),
        }

    q0_b = np.empty_like(q0)
    q0_b[perm] = q0
    vhat_a, metrics_a = pipeline(q0, us1, vs1, us2, vs2, m_a, truth_a)
    vhat_b, metrics_b = pipeline(
        q0_b, perm[us1].astype(np.int32), perm[vs1].astype(np.int32),
        perm[us2].astype(np.int32), perm[vs2].astype(np.int32), m_b, truth_b,
    )
    assert np.array_equal(vhat_b[perm], vhat_a)  # per-node outputs permute bitwise
    assert metrics_a["mis"] == metrics_b["mis"]
    for key in ("a1", "a2", "norm2", "sub"):
        assert metrics_a[key] == pytest.approx(metrics_b[key], abs=1e-9)


# --- config and matrix files ----------------------------------------------------------


CONFIG_TEXT = """
# demo config
model=weighted
n=16
p=2
q=1
k=2
eta=0.01       # step size
t_oja=2000
t_orth=2000
cleanup=on
cleanup_phases=1
cleanup_rounds=50
trials=2
base_seed=9
"""


def test_parse_config_roundtrip():
    config = harness.parse_config(CONFIG_TEXT)
    assert config.model == "weighted"
    assert (config.n, config.p, config.q, config.k) == (16, 2.0, 1.0, 2)
    assert (config.eta, config.t_oja, config.t_orth) == (0.01, 2000, 2000)
    assert config.cleanup and config.cleanup_phases == 1 and config.cleanup_rounds == 50
    assert (config.trials, config.base_seed) == (2, 9)


def test_parse_config_rejects_unknown_key():
    with pytest.raises(InvalidParametersError):
        harness.parse_config("model=population\nn=4\neta=0.1\nt_oja=1\nt_orth=1\nbogus=1\n")


def test_config_requires_exactly_one_parameterization():
    with pytest.raises(InvalidParametersError):
        harness.parse_config("model=population\nn=4\n")
    with pytest.raises(InvalidParametersError):
        harness.parse_config("model=population\nn=4\neta=0.1\nt_oja=1\nt_orth=1\neps=0.1\ndelta=0.1\n")


def test_config_schedule_constants_keys():
    config = harness.parse_config("model=population\nn=8\neps=0.5\ndelta=0.5\nc2=0.001\n")
    assert config.constants.c2 == 0.001


def test_matrix_file_roundtrip():
    m = np.array([[1.5, -2.0], [-2.0, 3.25e-8]])
    buf = io.StringIO()
    harness.write_matrix_file(m, buf)
    back = harness.read_matrix_file(io.StringIO(buf.getvalue()))
    assert np.array_equal(back, m)


# --- CLI ---------------------------------------------------------------------------------


def test_cli_oracle_matrix_file(tmp_path, capsys):
    path = tmp_path / "m.txt"
    path.write_text("2\n2 1\n1 2\n")
    assert cli.main(["oracle", "--matrix-file", str(path)]) == 0
    out = capsys.readouterr().out.strip().split()
    assert [float(x) for x in out] == [3.0, 1.0]


def test_cli_oracle_model(capsys):
    assert cli.main(["oracle", "--model", "weighted", "--n", "4", "--p", "2", "--q", "1"]) == 0
    values = [float(x) for x in capsys.readouterr().out.strip().split()]
    assert values == pytest.approx([1.0, 0.5, 0.25, 0.25], abs=1e-10)


def test_cli_simulate_and_sweep(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("model=weighted\nn=16\np=2\nq=1\neta=0.01\nt_oja=500\nt_orth=500\ntrials=2\nbase_seed=3\n")
    assert cli.main(["simulate", str(cfg)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == ",".join(harness.CSV_COLUMNS)
    assert len(out) == 3

    out_csv = tmp_path / "results.csv"
    assert cli.main(["sweep", str(cfg), "--out", str(out_csv)]) == 0
    assert out_csv.exists()
    assert (tmp_path / "results.summary.csv").exists()
    rows = out_csv.read_text().splitlines()
    assert len(rows) == 3
