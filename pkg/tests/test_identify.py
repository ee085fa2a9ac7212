"""Identification oracles: exact recovery, negative control, rejection."""

import numpy as np
import pytest

from antiroll.control import (IdentificationError, LinearModel,
                              identify_state_space)
from antiroll.data import TrajectoryLog

from lti_util import pe_input, random_lti, simulate_lti


def _log_from_lti(rng, a, b, c, d, t_len):
    u = pe_input(rng, t_len, b.shape[1])
    y = simulate_lti(a, b, c, d, np.zeros(a.shape[0]), u)
    return TrajectoryLog(u=u, y=y, sample_period=0.01)


def test_noiseless_fourth_order_recovered_exactly():
    rng = np.random.default_rng(7)
    a, b, c, d = random_lti(rng, 4, 2, 1)
    log = _log_from_lti(rng, a, b, c, d, 1500)
    model = identify_state_space(log, order=4)
    assert model.fit is not None
    assert model.fit.nrms_max <= 1e-6
    assert model.fit.holdout_samples == 300


def test_recovered_impulse_response_matches_truth():
    rng = np.random.default_rng(11)
    a, b, c, d = random_lti(rng, 4, 2, 1)
    log = _log_from_lti(rng, a, b, c, d, 1500)
    model = identify_state_space(log, order=4)
    truth = np.empty((20, 1, 2))
    truth[0] = d
    reach = b.copy()
    for k in range(1, 20):
        truth[k] = c @ reach
        reach = a @ reach
    assert np.abs(model.markov_parameters(20) - truth).max() < 1e-8


def test_fifth_order_two_output_system():
    rng = np.random.default_rng(23)
    a, b, c, d = random_lti(rng, 5, 2, 2)
    log = _log_from_lti(rng, a, b, c, d, 2000)
    model = identify_state_space(log, order=5)
    assert model.fit.nrms_max <= 1e-6
    assert model.order == 5
    assert model.spectral_radius == pytest.approx(0.9, abs=1e-6)


def test_white_noise_output_has_no_explanatory_power():
    rng = np.random.default_rng(3)
    u = pe_input(rng, 1500, 2)
    y = rng.standard_normal((1500, 1))
    model = identify_state_space(TrajectoryLog(u=u, y=y, sample_period=0.01),
                                 order=4)
    assert model.fit.nrms_max > 0.8


def test_unexciting_log_rejected_with_diagnostic():
    u = np.zeros((1200, 2))
    y = np.zeros((1200, 1))
    log = TrajectoryLog(u=u, y=y, sample_period=0.01)
    with pytest.raises(IdentificationError, match="rank deficient"):
        identify_state_space(log, order=4)


def test_offsets_absorb_operating_point():
    rng = np.random.default_rng(41)
    a, b, c, d = random_lti(rng, 3, 1, 1)
    u = pe_input(rng, 1200, 1) + 5.0
    y = simulate_lti(a, b, c, d, np.zeros(3), u) - 2.0
    model = identify_state_space(
        TrajectoryLog(u=u, y=y, sample_period=0.01), order=3)
    assert model.u_offset[0] == pytest.approx(5.0, abs=0.2)
    assert model.fit.nrms_max <= 1e-6


def test_simulate_physical_round_trips_offsets():
    model = LinearModel(a=np.array([[0.5]]), b=np.array([[1.0]]),
                        c=np.array([[2.0]]), d=np.array([[0.0]]), order=1,
                        u_offset=np.array([3.0]), y_offset=np.array([-1.0]))
    out = model.simulate(np.full((10, 1), 3.0), physical=True)
    assert np.allclose(out, -1.0)


def test_model_dimension_validation():
    with pytest.raises(ValueError, match="state matrix"):
        LinearModel(a=np.eye(3), b=np.zeros((2, 1)), c=np.zeros((1, 2)),
                    d=np.zeros((1, 1)), order=2)
    with pytest.raises(ValueError, match="feedthrough"):
        LinearModel(a=np.eye(2), b=np.zeros((2, 1)), c=np.zeros((1, 2)),
                    d=np.zeros((2, 2)), order=2)


def test_short_log_rejected():
    rng = np.random.default_rng(5)
    log = TrajectoryLog(u=rng.standard_normal((40, 2)),
                        y=rng.standard_normal((40, 1)), sample_period=0.01)
    with pytest.raises(ValueError, match="too short"):
        identify_state_space(log, order=4)
