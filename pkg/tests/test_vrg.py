import math

import numpy as np
import pytest

from zo_nsnc.geometry import Ball, Box, WholeSpace
from zo_nsnc.problems import ConstantObjective, LinearObjective, NormObjective, make_logistic_l1, make_min_two_quadratics
from zo_nsnc.schedules import BatchSchedule, StepSchedule
from zo_nsnc.vrg import (VrgConfig, checkpoint_iterations, measure_residual, objective_value, resolve_x0,
                         spawn_streams, vrg_run)

# the default constant step is above the rate threshold for min-quadratics; that is fine here
pytestmark = pytest.mark.filterwarnings("ignore:constant stepsize")


def test_spawn_streams_are_independent_and_reproducible():
    a = [g.random(3) for g in spawn_streams(5)]
    b = [g.random(3) for g in spawn_streams(5)]
    for u, v in zip(a, b):
        np.testing.assert_array_equal(u, v)
    assert not np.allclose(a[0], a[1])


def test_checkpoint_iterations():
    assert checkpoint_iterations(10, 50) == list(range(11))
    ks = checkpoint_iterations(1000, 50)
    assert ks[0] == 0 and ks[-1] == 1000 and ks[1] == 20
    assert checkpoint_iterations(101, 50)[:3] == [0, 3, 6]


def test_resolve_x0():
    np.testing.assert_array_equal(resolve_x0(Box(-1.0, 3.0), 2, None), [1.0, 1.0])
    with pytest.raises(ValueError):
        resolve_x0(WholeSpace(), 3, np.zeros(2))


def test_measure_residual_examples():
    rng = np.random.default_rng(0)
    c = np.array([3.0, -4.0])
    assert measure_residual(LinearObjective(c), WholeSpace(), np.zeros(2), 0.1, 2.0, 10, rng) == pytest.approx(5.0)
    # at the lower corner of the box with gradient pointing outward the residual vanishes
    assert measure_residual(LinearObjective(np.ones(2)), Box(0.0, 1.0), np.zeros(2), 0.1, 1.0, 10, rng) == 0.0
    P = make_min_two_quadratics(3)
    x = np.full(3, 1.0)
    assert measure_residual(P, WholeSpace(), x, 0.1, 1.0, 10, rng) == pytest.approx(0.0, abs=1e-12)


def test_objective_value_oracle_and_estimate():
    P = make_min_two_quadratics(3)
    assert objective_value(P, np.zeros(3), 10, None) == pytest.approx(4.0)
    N = NormObjective(2, 3.0)
    assert objective_value(N, np.array([3.0, 4.0]), 10, np.random.default_rng(0)) == pytest.approx(15.0)


def test_constant_objective_stays_put():
    cfg = VrgConfig(eta=0.1, batch=BatchSchedule("constant", size=3), max_iter=20, x0=np.array([0.2, -0.3]))
    rep = vrg_run(ConstantObjective(2), Box(-1.0, 1.0), cfg, seed=1)
    np.testing.assert_array_equal(rep.x_final, [0.2, -0.3])
    assert rep.G_K == 0.0 and rep.G_R == 0.0


def test_all_iterates_feasible():
    P = make_min_two_quadratics(4)
    S = Box(-0.5, 0.5)
    cfg = VrgConfig(eta=0.1, step=StepSchedule("constant", 0.05), batch=BatchSchedule("affine", a=0.1),
                    max_iter=200, x0=np.full(4, 3.0), keep_trajectory=True)
    rep = vrg_run(P, S, cfg, seed=2)
    traj = rep.extras["trajectory"]
    assert np.all(np.abs(traj) <= 0.5)
    assert all(c.infeas == 0.0 for c in rep.checkpoints)
    assert rep.infeas_K == 0.0


def test_abs_on_interval_goes_to_zero():
    cfg = VrgConfig(eta=0.01, step=StepSchedule("constant", 0.002), batch=BatchSchedule("constant", size=4),
                    max_iter=2000, x0=np.array([0.8]))
    rep = vrg_run(NormObjective(1), Box(-1.0, 1.0), cfg, seed=3)
    assert abs(rep.x_final[0]) < 0.02
    assert rep.f_K < 0.02


def test_determinism():
    P = make_min_two_quadratics(3)
    cfg = VrgConfig(eta=0.1, batch=BatchSchedule("affine", a=0.1), budget=5000, x0=np.array([1.0, 2.0, -1.0]))
    a = vrg_run(P, WholeSpace(), cfg, seed=7)
    b = vrg_run(P, WholeSpace(), cfg, seed=7)
    c = vrg_run(P, WholeSpace(), cfg, seed=8)
    np.testing.assert_array_equal(a.x_final, b.x_final)
    assert a.out_index == b.out_index and a.G_R == b.G_R
    assert not np.array_equal(a.x_final, c.x_final)


@pytest.mark.parametrize("budget", [100, 1234, 20_000])
def test_budget_accounting(budget):
    P = make_min_two_quadratics(3)
    cfg = VrgConfig(eta=0.1, batch=BatchSchedule("affine", a=0.5), budget=budget)
    rep = vrg_run(P, Ball(np.zeros(3), 2.0), cfg, seed=0)
    assert rep.evaluations == 2 * int(rep.batches.sum()) <= budget
    assert budget - rep.evaluations < 2 * cfg.batch.value(rep.K)
    assert rep.metric_evaluations == 0  # exact oracle, no metric sampling
    assert rep.K == len(rep.gammas) == len(rep.batches)
    assert rep.checkpoints[0].k == 0 and rep.checkpoints[-1].k == rep.K


def test_output_index_in_window():
    P = make_min_two_quadratics(3)
    for seed in range(10):
        rep = vrg_run(P, WholeSpace(), VrgConfig(eta=0.1, max_iter=21, window=0.5), seed=seed)
        assert 11 <= rep.out_index <= 20


def test_metric_sampling_when_no_oracle():
    P, _ = make_logistic_l1(100, 3, seed=0)
    cfg = VrgConfig(eta=0.1, max_iter=5, metric_batch=50, checkpoints=5)
    rep = vrg_run(P, WholeSpace(), cfg, seed=0)
    # one metric estimate per checkpoint plus one at the output index
    assert rep.metric_evaluations == 2 * 50 * (len(rep.checkpoints) + 1)


@pytest.mark.filterwarnings("default")
def test_large_constant_step_warns():
    P = make_min_two_quadratics(2)
    big = 0.1 / (math.sqrt(2) * P.lipschitz_l0)
    with pytest.warns(UserWarning, match="stepsize"):
        vrg_run(P, WholeSpace(), VrgConfig(eta=0.1, step=StepSchedule("constant", big), max_iter=2))


def test_config_validation():
    with pytest.raises(ValueError):
        VrgConfig(eta=0.0, max_iter=1)
    with pytest.raises(ValueError):
        VrgConfig()
    with pytest.raises(ValueError):
        vrg_run(make_min_two_quadratics(2), WholeSpace(), VrgConfig(budget=1))
