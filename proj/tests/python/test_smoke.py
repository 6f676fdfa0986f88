import math

import pytest

import mfspec

LOG2 = math.log(2.0)


def system_b():
    return mfspec.family([[1, 1], [1, 1]], 0.0, [LOG2, 2 * LOG2])


def test_system_a_line():
    fam = mfspec.family([[1, 1], [1, 1]], 0.0, LOG2)
    for q in (-3.0, 0.0, 1.0, 2.5):
        assert abs(mfspec.solve_T(fam, q) - (1.0 - q)) <= 1e-10
        assert abs(mfspec.alpha(fam, q) - 1.0) <= 1e-10
    assert abs(mfspec.pressure(fam, 0.0, 0.0) - LOG2) <= 1e-12


def test_system_b_closed_form():
    fam = system_b()
    x = (-1.0 + math.sqrt(5.0)) / 2.0
    assert abs(mfspec.solve_T(fam, 0.0) + math.log2(x)) <= 1e-10
    assert abs(mfspec.solve_T(fam, 1.0)) <= 1e-10
    assert abs(mfspec.alpha(fam, 0.0) - (1 + x) / (2 * x + 1)) <= 1e-9
    assert abs(fam.normalization_shift - LOG2) <= 1e-12


def test_curve_and_legendre():
    fam = system_b()
    grid = mfspec.make_grid(-2.0, 2.0, 0.5)
    curve = mfspec.temperature_curve(fam, grid)
    assert curve["q"] == grid
    assert curve["convention_used"] == "one_sided"
    res = mfspec.legendre_check(fam, mfspec.make_grid(-8.0, 8.0, 0.1))
    assert res["slope"] <= 5e-3


def test_golden_mean_potential_forms():
    words = {"00": 0.0, "01": 0.0, "10": 0.0}
    fam = mfspec.family([[1, 1], [1, 0]], words, [LOG2, math.log(3.0)])
    assert fam.depth == 2
    assert abs(mfspec.pressure(fam, 0.0, 0.0) - math.log((1 + math.sqrt(5)) / 2)) <= 1e-10
    cert = mfspec.gibbs_certificate(fam, 0.0, 6)
    assert cert["certified"]
    assert mfspec.conformality_defect(fam, 1.0, 6) <= 1e-12


def test_sampling_and_orbits():
    fam = system_b()
    rep = mfspec.level_set_concentration(fam, 0.0, 1000, 100, 0.05, 11)
    assert rep["fraction"] >= 0.9
    rec = mfspec.irregular_point(fam, "0", "1", 16.0, 100000)
    assert rec["certified"]
    e = mfspec.endpoints(fam, 8)
    assert e["periodic"]["alpha1"] == 0.5


def test_errors_map_to_python():
    with pytest.raises(mfspec.ReducibleMatrix):
        mfspec.family([[1, 0], [0, 1]], 0.0, LOG2)
    with pytest.raises(mfspec.EqualRatios):
        mfspec.irregular_point(mfspec.family([[1, 1], [1, 1]], 0.0, LOG2), "0", "1", 4.0, 1000)
    with pytest.raises(mfspec.Error):
        mfspec.family([[1, 1], [1, 1]], 0.0, [LOG2])
