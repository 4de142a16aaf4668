import datetime as dt

import numpy as np
import pytest

from loadshape import dtw, synth
from loadshape.curves import normalize


def _arch(jitter=1, start=18, duration=3, power=2.0, baseline=0.3):
    dev = synth.DeviceProfile("oven", power, start, duration, jitter)
    return synth.HouseholdArchetype("a", (dev,), baseline_kw=baseline)


def test_jitter_zero_days_identical():
    h = synth.generate_household(_arch(jitter=0), 7, seed=1)
    assert all(np.array_equal(h.curves[0].values, c.values) for c in h.curves)


def test_single_device_block():
    # Nominal 18..20 with +-1 jitter: the 2 kW block starts at 17, 18 or 19.
    h = synth.generate_household(_arch(), 40, seed=5)
    starts = set()
    for c in h.curves:
        on = np.flatnonzero(c.values > 0.3 + 1e-9)
        assert on.size == 3 and np.all(np.diff(on) == 1)
        np.testing.assert_allclose(c.values[on], 2.3)
        np.testing.assert_allclose(np.delete(c.values, on), 0.3)
        starts.add(int(on[0]))
    assert starts == {17, 18, 19}


def test_energy_bookkeeping(benchmark):
    for house in benchmark.households[::7]:
        for c, A in zip(house.curves, house.usage):
            np.testing.assert_allclose(A @ house.powers, c.values, rtol=0, atol=1e-12)


def test_overflow_is_clamped_and_flagged():
    h = synth.generate_household(_arch(start=21), 30, seed=0)
    assert h.overflow_days
    assert all(c.values.max() > 2 for c in h.curves)


def test_population_shape_and_determinism():
    a = synth.benchmark_population(seed=3)
    b = synth.benchmark_population(seed=3)
    assert len(a.curves) == 3 * 20 * 22
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a.curves, b.curves))
    assert np.bincount(a.labels).tolist() == [440, 440, 440]
    c = synth.benchmark_population(seed=4)
    assert not all(np.array_equal(x.values, y.values) for x, y in zip(a.curves, c.curves))


def test_zero_households():
    pop = synth.generate_population(synth.load_archetypes(), 0, 5)
    assert pop.curves == []


def test_dates_and_ids():
    pop = synth.generate_population(synth.load_archetypes(), 1, 3, start_date=dt.date(2022, 1, 1))
    assert pop.households[0].household_id.endswith("-000")
    assert [c.date for c in pop.households[0].curves] == [dt.date(2022, 1, d) for d in (1, 2, 3)]


def test_shape_family_property():
    # Two archetypes whose devices are at least 3 hours apart.
    morning = synth.HouseholdArchetype("m", (synth.DeviceProfile("kettle", 2.0, 6, 2),), 0.2)
    evening = synth.HouseholdArchetype("e", (synth.DeviceProfile("oven", 2.0, 17, 2),), 0.2)
    hm = synth.generate_household(morning, 10, seed=1)
    he = synth.generate_household(evening, 10, seed=2)
    M = [normalize(c) for c in hm.curves]
    E = [normalize(c) for c in he.curves]
    within = max(dtw.dtw_distance(a, b) for a in M for b in M)
    across = min(dtw.dtw_distance(a, b) for a in M for b in E)
    assert within <= across


def test_invalid_profiles():
    with pytest.raises(ValueError):
        synth.DeviceProfile("x", 1.0, 23, 2)
    with pytest.raises(ValueError):
        synth.DeviceProfile("x", 0.0, 1, 2)
    with pytest.raises(ValueError):
        synth.DeviceProfile("x", 1.0, 1, 2, jitter=2)
    with pytest.raises(ValueError):
        synth.HouseholdArchetype("x", ())
