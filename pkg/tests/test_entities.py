import pytest
from hypothesis import given, strategies as st

from geogen.errors import MalformedEntity, SlotKindMismatch
from geogen.formal.entities import make_entity, point_sort_key, split_points, symmetric_variants

names = st.sampled_from(["A", "B", "C", "D", "E", "F", "P1", "Q2"])


def test_split_points_multi_char():
    assert split_points("A1BC") == ("A1", "B", "C")
    with pytest.raises(MalformedEntity):
        split_points("Ab")


def test_point_order():
    assert sorted(["A1", "B", "A"], key=point_sort_key) == ["A", "B", "A1"]


def test_segment_and_angle_canonical():
    assert make_entity("segment", ("C", "A")).text == "AC"
    assert make_entity("angle", ("C", "B", "A")).text == "ABC"


def test_polygon_rotation_and_reflection():
    assert make_entity("polygon4", ("C", "D", "A", "B")).text == "ABCD"
    assert make_entity("polygon3", ("A", "C", "B")).text == "ACB"
    assert make_entity("polygon3", ("A", "C", "B"), dihedral=True).text == "ABC"


def test_bad_sizes():
    with pytest.raises(MalformedEntity):
        make_entity("segment", ("A",))
    with pytest.raises(SlotKindMismatch):
        make_entity("segment", ("A", "B", "C"))
    with pytest.raises(MalformedEntity):
        make_entity("angle", ("A", "B", "A"))


@given(st.sampled_from(["segment", "angle", "polygon3", "polygon4"]), st.data(), st.booleans())
def test_canonical_form_invariant_under_symmetry(kind, data, reflect):
    n = {"segment": 2, "angle": 3, "polygon3": 3, "polygon4": 4}[kind]
    pts = tuple(data.draw(st.lists(names, min_size=n, max_size=n, unique=True)))
    dihedral = reflect and kind.startswith("polygon")
    base = make_entity(kind, pts, dihedral=dihedral)
    for v in symmetric_variants(kind, pts, reflect=dihedral):
        assert make_entity(kind, v, dihedral=dihedral) == base
    # idempotent
    assert make_entity(kind, base.points, dihedral=dihedral) == base
