import numpy as np
import pytest

from taylorcbf.metrics import Metrics, compute_metrics, count_design_parameters
from taylorcbf.scenarios.corridor import CorridorParams
from taylorcbf.simulate import Trajectory


def make_traj(states, inputs, method="ttcbf"):
    n = states.shape[0]
    return Trajectory(
        t=np.arange(n) * 0.05, states=states, inputs=inputs,
        h=np.ones((n, 18)), zetas=np.zeros((n - 1, 2)),
        etas=np.zeros((n - 1, 0)), status=["optimal"] * (n - 1),
        fallback=np.zeros(n - 1, dtype=bool), method=method)


def test_constant_speed_average():
    states = np.zeros((11, 4))
    states[:, 0] = 40.0
    states[:, 3] = 10.0
    tr = make_traj(states, np.zeros((10, 2)))
    m = compute_metrics(tr, CorridorParams())
    assert m.avg_speed == 10.0
    assert m.e_path == 0.0


def test_normalized_effort():
    states = np.zeros((11, 4))
    states[:, 0] = 40.0
    inputs = np.zeros((10, 2))
    inputs[:, 0] = 1.0
    m = compute_metrics(make_traj(states, inputs), CorridorParams())
    assert m.effort[0] == 0.5
    assert m.effort[1] == 0.0


def test_efforts_bounded():
    rng = np.random.default_rng(0)
    states = np.zeros((11, 4))
    states[:, 0] = 40.0
    inputs = rng.uniform(-2, 2, size=(10, 2))
    m = compute_metrics(make_traj(states, inputs), CorridorParams())
    assert all(0.0 <= e <= 1.0 for e in m.effort)


def test_path_error():
    states = np.zeros((3, 4))
    states[:, 0] = [40.0, 41.0, 39.0]
    m = compute_metrics(make_traj(states, np.zeros((2, 2))), CorridorParams())
    assert m.e_path == pytest.approx(2.0 / 3.0)


def test_design_parameter_counts():
    assert count_design_parameters("attcbf", 18, 2) == 18
    assert count_design_parameters("pacbf", 18, 2) == 72
    assert count_design_parameters("racbf", 18, 2) == 126


def test_design_parameter_validation():
    with pytest.raises(ValueError):
        count_design_parameters("hocbf", 18, 2)
    with pytest.raises(ValueError):
        count_design_parameters("attcbf", -1, 2)
    with pytest.raises(ValueError):
        count_design_parameters("attcbf", 18, 0)


def test_run_counts_by_method():
    states = np.zeros((3, 4))
    states[:, 0] = 40.0
    assert compute_metrics(make_traj(states, np.zeros((2, 2)), "attcbf"),
                           CorridorParams()).design_parameters == 18
    assert compute_metrics(make_traj(states, np.zeros((2, 2)), "ttcbf"),
                           CorridorParams()).design_parameters == 1


def test_as_dict_roundtrips_effort():
    m = Metrics(1.0, (0.1, 0.2), 0.3, 0.4, 0, 18)
    assert m.as_dict()["effort"] == [0.1, 0.2]
