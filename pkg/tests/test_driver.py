import dataclasses
import itertools

import numpy as np
import pytest

from aclbf import driver
from aclbf.driver import EnergyIncreaseError, IglimParams, NonFiniteFieldError, RunConfig, \
    binarize, dice, evolve, read_trace, segment, write_trace
from aclbf.etd import StabilizerPolicy
from aclbf.iglim import NoEdgesError, iglim
from aclbf.model import ModelParams
from aclbf.synth import disk, suite_config


@pytest.fixture(scope="module")
def small_disk():
    return disk(size=48, radius=12)


def test_binarize():
    assert not binarize(np.full((3, 3), -1.0)).any()
    assert binarize(np.ones((3, 3))).all()
    u = np.full((4, 4), -0.5)
    u[2, 1] = 1e-9
    assert np.argwhere(binarize(u)).tolist() == [[2, 1]]
    assert not binarize(np.zeros((2, 2))).any()


def test_dice_examples():
    a = np.zeros((4, 4), bool)
    a[0:2, 0:2] = True
    b = np.roll(a, 1, axis=1)
    assert dice(a, a) == 1.0
    assert dice(a, np.roll(a, 2, axis=0)) == 0.0
    assert dice(a, b) == 0.5
    assert dice(np.zeros((2, 2)), np.zeros((2, 2))) == 1.0
    with pytest.raises(ValueError):
        dice(a, np.zeros((4, 5)))


def test_config_validation_and_roundtrip():
    with pytest.raises(ValueError):
        RunConfig(scheme="euler")
    with pytest.raises(ValueError):
        RunConfig(max_iters=0)
    with pytest.raises(ValueError):
        IglimParams(side="left")
    with pytest.raises(ValueError):
        IglimParams(passes=-1)
    cfg = RunConfig(model=ModelParams(mu=3.0), init=IglimParams(passes=2),
                    stabilizer=StabilizerPolicy("table", multiplier=4.0), max_iters=9)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_defaults():
    cfg = RunConfig()
    m, i = cfg.model, cfg.init
    assert (i.lam, i.k1, i.k2, i.passes, i.side) == (50.0, 0.01, 0.01, 1, "auto")
    assert (m.lambda1, m.lambda2, m.sigma, m.h, m.dt, m.eps, m.eps1) == \
        (1.0, 1.0, 3.0, 0.01, 0.1, 0.5, 0.5)
    assert cfg.stabilizer.mode == "auto" and cfg.max_iters == 500


def test_constant_image_fails_before_solver(monkeypatch):
    def boom(*args, **kwargs):
        raise AssertionError("solver reached")
    monkeypatch.setattr(driver, "evolve", boom)
    with pytest.raises(NoEdgesError, match="no edges detected"):
        segment(np.full((20, 20), 0.5), RunConfig())


def test_disk_segmentation(small_disk):
    img, truth = small_disk
    res = segment(img, suite_config("etdrk2"))
    assert res.converged
    assert dice(res.mask, truth) >= 0.99
    assert len(res.trace) == res.iterations + 1
    assert [r.iteration for r in res.trace] == list(range(res.iterations + 1))
    assert np.array_equal(res.mask, res.u > 0)
    assert len(res.stabilizers) == res.iterations
    assert res.energy_violations == 0
    s = res.summary()
    assert s["iterations"] == res.iterations and s["iglim"]["region_size"] > 0


def test_etd1_energy_monotone(small_disk):
    img, _ = small_disk
    energies = segment(img, suite_config("etd1")).energies()
    assert np.all(np.diff(energies) <= 1e-8 * np.abs(energies[:-1]))


def test_stops_exactly_when_masks_coincide(small_disk):
    img, _ = small_disk
    cfg = suite_config("etd1")
    full = segment(img, cfg)
    n = full.iterations
    assert n >= 2
    # every shorter run is an unconverged prefix of the full run
    for k in (1, n - 1):
        part = segment(img, dataclasses.replace(cfg, max_iters=k))
        assert not part.converged and part.iterations == k
        assert [r.energy for r in part.trace] == [r.energy for r in full.trace[:k + 1]]
    before = segment(img, dataclasses.replace(cfg, max_iters=n - 1))
    assert np.array_equal(before.mask, full.mask)
    prev = segment(img, dataclasses.replace(cfg, max_iters=n - 2)) if n > 2 else None
    if prev is not None:
        assert not np.array_equal(prev.mask, before.mask)


def test_max_iters_returns_partial_result(small_disk):
    img, _ = small_disk
    res = segment(img, suite_config("etdrk2", max_iters=1))
    assert res.iterations == 1 and not res.converged
    assert len(res.trace) == 2


def test_bit_identical_reruns(small_disk):
    img, _ = small_disk
    a = segment(img, suite_config("etdrk2"))
    b = segment(img, suite_config("etdrk2"))
    assert np.array_equal(a.u, b.u)
    assert [r.energy for r in a.trace] == [r.energy for r in b.trace]


def test_fixed_and_table_stabilizers_build_once(small_disk, monkeypatch):
    img, _ = small_disk
    calls = []
    original = driver.compute_stabilizer
    monkeypatch.setattr(driver, "compute_stabilizer",
                        lambda *a, **k: calls.append(1) or original(*a, **k))
    res = segment(img, suite_config("etd1", stabilizer=StabilizerPolicy("fixed", value=2e3)))
    assert len(calls) == 1 and set(res.stabilizers) == {2e3}
    calls.clear()
    res = segment(img, suite_config("etd1"))
    assert len(calls) == res.iterations


def rising(monkeypatch):
    counter = itertools.count()
    monkeypatch.setattr(driver, "energy_from_forces", lambda *a: float(next(counter)))


def test_energy_increase_counted(small_disk, monkeypatch):
    img, _ = small_disk
    rising(monkeypatch)
    res = segment(img, suite_config("etd1", max_iters=3))
    assert res.energy_violations == res.iterations


def test_energy_increase_strict(small_disk, monkeypatch):
    img, _ = small_disk
    rising(monkeypatch)
    with pytest.raises(EnergyIncreaseError, match="energy rose"):
        segment(img, suite_config("etdrk2", strict_energy=True))


def test_etdrk2_slack_is_absolute(monkeypatch, small_disk):
    img, _ = small_disk
    values = iter([100.0, 100.0 + 5e-5, 100.0 + 5e-5 + 5e-5])
    monkeypatch.setattr(driver, "energy_from_forces", lambda *a: next(values))
    res = segment(img, suite_config("etdrk2", strict_energy=True, max_iters=2))
    assert res.energy_violations == 0


def test_non_finite_field_detected(small_disk, monkeypatch):
    img, _ = small_disk
    monkeypatch.setattr(driver, "step", lambda u, *a: np.full_like(u, np.nan))
    with pytest.raises(NonFiniteFieldError):
        segment(img, suite_config("etd1"))


def test_evolve_accepts_custom_start(small_disk):
    img, truth = small_disk
    u0 = np.where(np.roll(truth, 2, axis=0), 1.0, -1.0)
    res = evolve(img, u0, suite_config("etdrk2"))
    assert res.init is None and res.converged
    assert dice(res.mask, truth) >= 0.98


def test_trace_csv_roundtrip(tmp_path, small_disk):
    img, _ = small_disk
    res = segment(img, suite_config("etdrk2", max_iters=3))
    path = tmp_path / "energy.csv"
    write_trace(res.trace, path)
    assert path.read_text().splitlines()[0] == "iter,energy,wall_ms"
    back = read_trace(path)
    assert [r.energy for r in back] == [r.energy for r in res.trace]
    assert [r.iteration for r in back] == [0, 1, 2, 3]


def test_init_diagnostics_match_iglim(small_disk):
    img, _ = small_disk
    cfg = suite_config("etdrk2", max_iters=1)
    res = segment(img, cfg)
    ref = iglim(img, passes=cfg.init.passes)
    assert res.init.diagnostics() == ref.diagnostics()
