import warnings

import numpy as np
import pytest

from mechent import detection as det
from mechent import gaussian as gs
from mechent import presets, rwa

import oracles as orc


def fig2_case_ii():
    p = presets.system_params("fig2", "ii")
    return p, rwa.steady_state(p)[2:, 2:]


def probe_for(cm, n, factor=10.0, kappa=1e5, **kw):
    gp = np.sqrt(factor * np.max(np.diag(cm)) * kappa)
    return det.ProbeConfig(gp, gp, kappa, n, **kw)


def test_snr_examples():
    assert np.array_equal(det.probe_output_snr(det.ProbeConfig(0.0, 0.0, 1.0, 10)), [0.0, 0.0])
    assert np.allclose(det.probe_output_snr(det.ProbeConfig(1.0, 2.0, 1.0, 10)), [1.0, 4.0])
    a = det.probe_output_snr(det.ProbeConfig(3.0, 3.0, 7.0, 10))
    b = det.probe_output_snr(det.ProbeConfig(6.0, 6.0, 7.0, 10))
    assert np.allclose(b, 4 * a)


def test_unit_snr_noise_equals_vacuum_signal():
    cfg = det.ProbeConfig(1.0, 1.0, 1.0, 10)
    assert np.allclose(cfg.shot_noise_variance, 0.5)


def test_probe_config_validation():
    with pytest.raises(ValueError):
        det.ProbeConfig(1.0, 1.0, 0.0, 10)
    with pytest.raises(ValueError):
        det.ProbeConfig(-1.0, 1.0, 1.0, 10)
    with pytest.raises(ValueError):
        det.simulate_homodyne(gs.vacuum_state(2), det.ProbeConfig(0.0, 1.0, 1.0, 10))


def test_backaction_flag():
    assert det.ProbeConfig(1.0, 1.0, 1.0, 10, G1=200.0, G2=200.0).backaction_negligible
    assert not det.ProbeConfig(5.0, 1.0, 1.0, 10, G1=200.0, G2=200.0).backaction_negligible
    assert det.ProbeConfig(1.0, 1.0, 1.0, 10).backaction_negligible is None


def test_determinism():
    _, cm = fig2_case_ii()
    cfg = probe_for(cm, 2000)
    a = det.simulate_homodyne(cm, cfg, seed=5)
    b = det.simulate_homodyne(cm, cfg, seed=5)
    c = det.simulate_homodyne(cm, cfg, seed=6)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_vacuum_variance_with_strong_probe():
    cfg = det.ProbeConfig(1e6, 1e6, 1.0, 200_000)
    rec = det.simulate_homodyne(gs.vacuum_state(2), cfg, seed=1)
    assert np.allclose(rec.values.var(axis=1), 0.5, atol=0.01)


def test_cross_covariance_has_no_shot_noise():
    cm = orc.random_physical_cm(np.random.default_rng(3), squeeze=0.8)
    cfg = det.ProbeConfig(1.0, 1.0, 1.0, 400_000, phase_grid=(0.0,))
    rec = det.simulate_homodyne(cm, cfg, seed=2)
    x1, x2 = rec.values[0, :, 0], rec.values[0, :, 1]
    se = np.sqrt((cm[0, 0] + 0.5) * (cm[2, 2] + 0.5) / len(x1))
    assert abs(np.mean(x1 * x2) - cm[0, 2]) < 4 * se
    assert np.var(x1) == pytest.approx(cm[0, 0] + 0.5, rel=0.02)


def test_phase_coverage_error():
    _, cm = fig2_case_ii()
    rec = det.simulate_homodyne(cm, probe_for(cm, 100, phase_grid=(0.0, np.pi / 2)), seed=0)
    with pytest.raises(det.PhaseCoverageError, match="x1p1"):
        det.reconstruct_cm(rec)
    det.check_coverage(det.ProbeConfig(1, 1, 1, 10).settings())


def test_strong_probe_recovery():
    cm = orc.random_physical_cm(np.random.default_rng(9), squeeze=0.5)
    rec = det.simulate_homodyne(cm, det.ProbeConfig(1e6, 1e6, 1.0, 100_000), seed=4)
    out = det.reconstruct_cm(rec, n_boot=50)
    assert np.all(np.abs(out.cm_est - cm) < 5 * out.stderr + 1e-12)
    assert np.max(np.abs(out.cm_est - cm)) < 0.05


def test_consistency_rate():
    cm = orc.random_physical_cm(np.random.default_rng(12), squeeze=0.5)
    ns = np.array([1e3, 1e4, 1e5]).astype(int)
    err = []
    for n in ns:
        e = [np.linalg.norm(det.reconstruct_cm(det.simulate_homodyne(cm, det.ProbeConfig(2.0, 2.0, 1.0, n), seed=s),
                                               n_boot=2).cm_raw - cm) for s in range(8)]
        err.append(np.sqrt(np.mean(np.square(e))))
    slope = np.polyfit(np.log(ns), np.log(err), 1)[0]
    assert slope == pytest.approx(-0.5, abs=0.1)


def test_shot_noise_subtraction_unbiased():
    cm = orc.random_physical_cm(np.random.default_rng(21), squeeze=0.5)
    cfg = det.ProbeConfig(0.7, 0.9, 1.0, 5000)  # noise comparable to the signal
    est, se = [], []
    for s in range(100):
        out = det.reconstruct_cm(det.simulate_homodyne(cm, cfg, seed=s), n_boot=30)
        est.append(out.cm_raw)
        se.append(out.stderr)
    mean = np.mean(est, axis=0)
    assert np.all(np.abs(mean - cm) < 2 * np.mean(se, axis=0))


def test_clamped_estimate_warns():
    cm = gs.vacuum_state(2)
    cfg = det.ProbeConfig(0.3, 0.3, 1.0, 20)
    clamped = 0
    for s in range(20):
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            out = det.reconstruct_cm(det.simulate_homodyne(cm, cfg, seed=s), n_boot=5, n_batches=5)
        if out.clamped:
            clamped += 1
            assert any(issubclass(x.category, det.UnphysicalEstimateWarning) for x in w)
            assert gs.is_physical(out.cm_est)
            assert not gs.is_physical(out.cm_raw)
    assert clamped > 0


def test_records_csv_round_trip(tmp_path):
    cm = gs.thermal_state([1.0, 2.0])
    rec = det.simulate_homodyne(cm, det.ProbeConfig(1.0, 2.0, 1.0, 7), seed=3)
    path = tmp_path / "rec.csv"
    det.write_records_csv(rec, path, {"seed": 3})
    back = det.read_records_csv(path)
    assert np.array_equal(back.values, rec.values)
    assert np.array_equal(back.phases, rec.phases)
    assert np.array_equal(back.noise_variance, rec.noise_variance)
    head = path.read_text().splitlines()
    assert "mode,phase_rad,sample_index,value" in head


@pytest.mark.filterwarnings("ignore::mechent.detection.UnphysicalEstimateWarning")
def test_fig2_case_ii_single_seed():
    _, cm = fig2_case_ii()
    out = det.reconstruct_cm(det.simulate_homodyne(cm, probe_for(cm, 100_000), seed=0), seed=0)
    assert np.isfinite(out.EN_est) and out.EN_stderr > 0


def test_fig2_case_ii_EN_bias_below_stderr():
    _, cm = fig2_case_ii()
    truth = gs.log_negativity(cm)
    est, se = [], []
    for s in range(10):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", det.UnphysicalEstimateWarning)
            out = det.reconstruct_cm(det.simulate_homodyne(cm, probe_for(cm, 100_000), seed=s), seed=s)
        est.append(out.EN_est)
        se.append(out.EN_stderr)
    assert abs(np.mean(est) - truth) < np.mean(se)
