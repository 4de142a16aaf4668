import numpy as np
import pytest

from loadshape import cluster, formats, synth
from loadshape.errors import NonFiniteError


def test_curve_roundtrip_is_exact():
    pop = synth.generate_population(synth.load_archetypes(), 1, 4, seed=3)
    back = formats.parse_curves_csv(formats.curves_text(pop.curves))
    assert [c.curve_id for c in back] == [c.curve_id for c in pop.curves]
    assert all(np.array_equal(a.values, b.values) for a, b in zip(back, pop.curves))


def test_bad_header_and_rows():
    header = ",".join(formats.CURVE_HEADER)
    with pytest.raises(formats.FormatError):
        formats.parse_curves_csv("id,date\n")
    with pytest.raises(formats.FormatError, match="line 2"):
        formats.parse_curves_csv(header + "\nh,2021-06-07,1\n")
    with pytest.raises(NonFiniteError, match="line 2"):
        formats.parse_curves_csv(header + "\nh,2021-06-07," + ",".join(["nan"] + ["1"] * 23) + "\n")


def test_model_roundtrip():
    X = np.random.default_rng(0).uniform(0, 1, (12, 24))
    m = cluster.kmedoids_dtw(X, 3, seed=2, curve_ids=[f"c{i}" for i in range(12)])
    back = formats.model_from_dict(formats.model_to_dict([m]))[0]
    np.testing.assert_array_equal(back.prototypes, m.prototypes)
    assert back.assignments == m.assignments and back.medoids == m.medoids
    with pytest.raises(formats.FormatError):
        formats.model_from_dict({"format": "other"})


def test_atomic_write_replaces(tmp_path):
    target = tmp_path / "x.txt"
    formats.atomic_write(target, "one")
    formats.atomic_write(target, "two")
    assert target.read_text() == "two"
    assert [p.name for p in tmp_path.iterdir()] == ["x.txt"]


def test_read_power_forms(tmp_path):
    (tmp_path / "a.json").write_text("[1, 2]")
    pv, names = formats.read_power(tmp_path / "a.json", 2.0)
    assert names == ["p1", "p2"] and pv.alpha == 2.0
    (tmp_path / "b.json").write_text('{"power": [1], "names": ["x", "y"]}')
    with pytest.raises(formats.FormatError):
        formats.read_power(tmp_path / "b.json")
