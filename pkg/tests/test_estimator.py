import warnings

import numpy as np
import pytest

from modalshape import estimator as ekf
from modalshape.kinematics import PlanarPose, SegmentGeometry, ShapeParams, measure, nominal_params

G = SegmentGeometry()


def truth_stream(w, ts, start_k=1):
    """Noise-free samples along ``ts`` with the exact increments as inputs."""
    u = np.diff(ts, prepend=ts[0])
    return [ekf.MeasurementSample(measure(t, w, G), float(du), k)
            for k, (t, du) in enumerate(zip(ts, u), start=start_k)]


def test_default_config_values():
    cfg = ekf.EstimatorConfig()
    est = ekf.initialize(cfg)
    assert est.t == 0.0
    assert est.state.cov[0, 0] == 1e-4
    np.testing.assert_allclose(est.params.mean, nominal_params().as_array())
    np.testing.assert_allclose(np.diag(est.params.cov), [0.1, 4e-7, 0.01, 4e-7, 0.0009])
    np.testing.assert_allclose(np.diag(cfg.noise.Rn), [0.5, 0.5, 0.0006])
    np.testing.assert_allclose(np.diag(cfg.noise.Re), [0.25, 0.25, 0.0003])


def test_zero_covariance_accepted():
    ekf.initialize(ekf.EstimatorConfig(Px0=0.0, Pw0=np.zeros((5, 5))))


def test_negative_covariance_rejected():
    with pytest.raises(ValueError):
        ekf.EstimatorConfig(Pw0=np.diag([0.1, -1e-3, 0.01, 4e-7, 9e-4]))
    with pytest.raises(ValueError):
        ekf.EstimatorConfig(Px0=-1.0)


def test_time_update():
    est = ekf.initialize(ekf.EstimatorConfig(x0=0.3))
    pred = ekf.time_update(est, 0.05, ekf.NoiseConfig())
    assert pred.t == pytest.approx(0.35)
    assert pred.state.cov[0, 0] == pytest.approx(2e-4)
    np.testing.assert_array_equal(pred.params.mean, est.params.mean)
    grew = np.diag(pred.params.cov) - np.diag(est.params.cov)
    np.testing.assert_allclose(grew, [0.01, 0, 0, 0, 0])


def test_scalar_gain_hand_check():
    H = np.array([[1.0], [0.0], [0.0]])
    mean, cov, K = ekf.kalman_update(np.array([0.0]), np.eye(1), np.array([1.0, 0, 0]), H, np.eye(3))
    np.testing.assert_allclose(K, [[0.5, 0.0, 0.0]])
    assert mean[0] == pytest.approx(0.5)
    assert cov[0, 0] == pytest.approx(0.5)


def test_singular_innovation_covariance():
    with pytest.raises(ekf.InnovationCovarianceError):
        ekf.kalman_update(np.zeros(1), np.zeros((1, 1)), np.zeros(3), np.zeros((3, 1)), np.zeros((3, 3)))


def test_ill_conditioned_warning():
    R = np.diag([1.0, 1.0, 1e-14])
    with pytest.warns(ekf.IllConditionedInnovation):
        ekf.kalman_update(np.zeros(1), np.eye(1), np.zeros(3), np.zeros((3, 1)), R)


def test_unobservable_state_unchanged():
    w = ShapeParams(60, (-0.002, 0), (-0.002, 0))
    est = ekf.time_update(ekf.initialize(ekf.EstimatorConfig(x0=0.4)), 0.0, ekf.NoiseConfig())
    post = ekf.state_measurement_update(est, PlanarPose(-3.0, 55.0, -0.2), w, ekf.NoiseConfig(), G)
    assert post.t == est.t
    assert post.state.cov[0, 0] == est.state.cov[0, 0]


def test_infinite_noise_limit():
    base = ekf.NoiseConfig()
    noise = ekf.NoiseConfig(base.Qv, base.Qr, base.Rn * 1e9, base.Re * 1e9)
    cfg = ekf.EstimatorConfig(noise=noise)
    est = ekf.initialize(cfg)
    # a realistic noisy first sample: truth at t = 0.01 plus sensor-sized noise
    y = measure(0.01, nominal_params(), G).as_array() + [0.4, -0.3, 0.015]
    sample = ekf.MeasurementSample(PlanarPose.from_array(y), 0.01, 1)
    pred = ekf.time_update(est, sample.u, noise)
    post = ekf.step(est, sample, cfg, G)
    assert abs(post.t - pred.t) <= 1e-6
    np.testing.assert_allclose(post.params.mean, pred.params.mean, rtol=0, atol=1e-6)


def test_zero_uncertainty_parameters_frozen():
    noise = ekf.NoiseConfig(Qr=np.zeros((5, 5)))
    cfg = ekf.EstimatorConfig(Pw0=np.zeros((5, 5)), noise=noise)
    w_true = ShapeParams.from_array(nominal_params().as_array() * [1, 1.1, 0.9, 1.1, 0.9])
    ts = np.linspace(0, 1, 50)
    out = ekf.run(truth_stream(w_true, ts), cfg, G)
    for e in out:
        np.testing.assert_array_equal(e.params.mean, cfg.w0)


def test_truth_initialized_replay():
    w = nominal_params()
    zero = ekf.NoiseConfig(Qv=np.zeros((1, 1)), Qr=np.zeros((5, 5)))
    cfg = ekf.EstimatorConfig(noise=zero)
    ts = np.linspace(0, 1, 100)
    out = ekf.run(truth_stream(w, ts), cfg, G)
    for e, t in zip(out, ts):
        assert abs(e.t - t) <= 1e-6
        np.testing.assert_allclose(e.params.mean, w.as_array(), rtol=1e-6)


def test_gain_shapes_and_psd():
    cfg = ekf.EstimatorConfig()
    rng = np.random.default_rng(3)
    ts = np.linspace(0, 1, 40)
    samples = [ekf.MeasurementSample(PlanarPose.from_array(s.y.as_array() + rng.normal(0, 0.3, 3)),
                                     s.u, s.k)
               for s in truth_stream(nominal_params(), ts)]
    for e in ekf.run(samples, cfg, G):
        assert e.K_x.shape == (1, 3)
        assert e.K_w.shape == (5, 3)
        for P in (e.state.cov, e.params.cov):
            assert np.max(np.abs(P - P.T)) < 1e-12
            assert np.min(np.linalg.eigvalsh(P)) >= -1e-10


def test_deterministic_replay():
    cfg = ekf.EstimatorConfig()
    samples = truth_stream(ShapeParams.from_array(nominal_params().as_array() * 0.9),
                           np.linspace(0, 1, 30))
    a = ekf.run(samples, cfg, G)
    b = ekf.run(samples, cfg, G)
    for x, y in zip(a, b):
        assert x.state.mean.tobytes() == y.state.mean.tobytes()
        assert x.params.mean.tobytes() == y.params.mean.tobytes()


def test_tick_must_increase():
    cfg = ekf.EstimatorConfig()
    est = ekf.step(ekf.initialize(cfg), ekf.MeasurementSample(measure(0, nominal_params(), G), 0, 1),
                   cfg, G)
    with pytest.raises(ValueError):
        ekf.step(est, ekf.MeasurementSample(measure(0, nominal_params(), G), 0, 1), cfg, G)


def test_divergence_detected():
    cfg = ekf.EstimatorConfig()
    with pytest.raises(ekf.FilterDivergence):
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore")
            ekf.step(ekf.initialize(cfg), ekf.MeasurementSample(PlanarPose(0, 0, np.inf), 0.0, 1),
                     cfg, G)


def test_length_clamped_to_segment():
    cfg = ekf.EstimatorConfig()
    y = PlanarPose(-40.0, 60.0, -3.0)
    for e in ekf.run([ekf.MeasurementSample(y, 0.0, k) for k in range(1, 20)], cfg, G):
        assert 0.0 <= e.params.mean[0] <= G.L
