import math

import pytest

import mcdetect

SCENARIO = {
    "classes": [{"radius": 3, "diffusion": 100, "density": 2e-5}],
    "exclusion_radius": 10,
}


def test_single_nm_reference():
    assert mcdetect.p_single(100, 4, 100, 50) == pytest.approx(0.05959819203261815, rel=1e-12)
    assert mcdetect.erfc(1.0) == pytest.approx(0.15729920705028513, rel=1e-14)


def test_sensing_radius():
    assert round(mcdetect.sensing_radius(100, 100, 0.002), 2) == 39.79


def test_evaluate_is_monotone_probability():
    values = mcdetect.evaluate(SCENARIO, "p_detect", [1, 2, 5, 10])
    assert all(0 <= v <= 1 for v in values)
    assert values == sorted(values)


def test_invalid_scenario_lists_violations():
    bad = {"classes": [{"radius": 3, "diffusion": -1, "density": 1e-5}], "exclusion_radius": 2}
    with pytest.raises(ValueError) as err:
        mcdetect.validate(bad)
    assert "D_i > 0" in str(err.value)
    assert "r >= max a_i" in str(err.value)


def test_degradable_detection_time_is_infinite():
    deg = dict(SCENARIO, target={"degradation_rate": 0.1})
    assert math.isinf(mcdetect.mean_detection_time(deg))
    assert mcdetect.mean_detection_time(SCENARIO) > 0


def test_simulation_agrees_with_closed_form():
    times = [1.0, 3.0]
    est = mcdetect.simulate(SCENARIO, trials=400, times=times, threads=1)
    exact = mcdetect.evaluate(SCENARIO, "p_detect", times)
    for p_hat, p in zip(est["p_hat"], exact):
        assert abs(p_hat - p) <= 4 * math.sqrt(p * (1 - p) / 400) + 0.01
    again = mcdetect.simulate(SCENARIO, trials=400, times=times, threads=2)
    assert again["p_hat"] == est["p_hat"]


def test_presets_and_compare():
    assert "fig2" in mcdetect.presets()
    assert mcdetect.preset_scenario("fig8")["marker"]["threshold"] == 0.002
    csv = mcdetect.run_figure("fig2", trials=0)
    assert csv.startswith("# experiment: fig2")
    with pytest.raises(mcdetect.StructuralError):
        mcdetect.compare_csv(csv)
