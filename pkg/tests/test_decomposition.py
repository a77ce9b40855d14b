from fractions import Fraction

import pytest

from hyperwidth.decomposition import (
    Decomposition,
    Node,
    decomposition_from_dict,
    decomposition_to_dict,
    format_decomposition,
    parse_decomposition,
    validate_decomposition,
)
from hyperwidth.hd import check_hd

ONE = Fraction(1)


def tri_hd(child_bag=frozenset("ca")):
    child = Node(child_bag, {"e3": ONE})
    return Decomposition(Node(frozenset("abc"), {"e1": ONE, "e2": ONE}, [child]), "HD")


def test_tri_hd_valid(h_tri):
    assert validate_decomposition(h_tri, tri_hd(), 2)


def test_shrunken_child_still_valid(h_tri):
    # e3 = {c,a} already sits in the root bag {a,b,c}
    assert validate_decomposition(h_tri, tri_hd(frozenset("a")), 2)


def test_tri_missing_edge(h_tri):
    root = Node(frozenset("ab"), {"e1": ONE}, [Node(frozenset("bc"), {"e2": ONE})])
    v = validate_decomposition(h_tri, Decomposition(root, "HD"), 2)
    assert not v and v.condition == "1" and "e3" in v.detail


def test_path_width_exceeded(h_path):
    d = Decomposition(Node(frozenset("abc"), {"e1": ONE, "e2": ONE}), "HD")
    v = validate_decomposition(h_path, d, 1)
    assert not v and v.condition == "width"


def test_connectedness(h_path):
    root = Node(frozenset("ab"), {"e1": ONE}, [Node(frozenset("c"), {"e2": ONE}, [Node(frozenset("bc"), {"e2": ONE})])])
    v = validate_decomposition(h_path, Decomposition(root, "GHD"))
    assert v.condition == "2"


def test_bag_not_covered(h_path):
    d = Decomposition(Node(frozenset("abc"), {"e1": ONE}), "GHD")
    assert validate_decomposition(h_path, d).condition == "3"


def test_special_condition_only_for_hd(h_tri):
    # root {a,b} with cover {e1,e2} covers c, which appears below but not in the root bag
    root = Node(frozenset("ab"), {"e1": ONE, "e2": ONE}, [Node(frozenset("abc"), {"e1": ONE, "e2": ONE})])
    assert validate_decomposition(h_tri, Decomposition(root, "HD")).condition == "4"
    assert validate_decomposition(h_tri, Decomposition(root, "GHD"))


def test_fractional_weights_need_fhd(h_tri):
    half = Fraction(1, 2)
    root = Node(frozenset("abc"), {"e1": half, "e2": half, "e3": half})
    assert validate_decomposition(h_tri, Decomposition(root, "GHD")).condition == "cover"
    assert validate_decomposition(h_tri, Decomposition(root, "FHD"), Fraction(3, 2))


def test_unknown_cover_edge(h_tri):
    d = Decomposition(Node(frozenset("abc"), {"zz": ONE}), "GHD")
    assert validate_decomposition(h_tri, d).condition == "cover"


def test_format_exact(h_tri):
    text = format_decomposition(tri_hd(), h_tri)
    assert text == "{a,b,c} cover: e1,e2\n> {a,c} cover: e3"


def test_format_weights():
    half = Fraction(1, 2)
    d = Decomposition(Node(frozenset("ab"), {"e1": ONE, "e2": half}), "FHD")
    assert format_decomposition(d) == "{a,b} cover: e1,e2=1/2"


@pytest.mark.parametrize("k", [1, 2, 3])
def test_text_and_json_roundtrip(h_square, k):
    d = check_hd(h_square, max(k, 2))
    again = parse_decomposition(format_decomposition(d, h_square) + "\nwidth: 2/1", "HD")
    assert again == d
    assert decomposition_from_dict(decomposition_to_dict(d)) == d


def test_parse_rejects_depth_jump():
    with pytest.raises(ValueError, match="depth"):
        parse_decomposition("{a} cover: e1\n>> {b} cover: e2")
