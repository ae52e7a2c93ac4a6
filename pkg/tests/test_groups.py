import pytest
from hypothesis import given, strategies as st

from centerbetti import (apply_quotient, conjugacy_class, cyclic, direct_product, free_abelian, free_group, mul,
                         reduction_map, symmetric3, word_distance)
from centerbetti.groups import ClassStatus, GroupError

ints = st.integers(-6, 6)


def z2(a, b):
    G = free_abelian(["u", "v"])
    return G.parse(f"u^{a} v^{b}")


@given(ints, ints, ints, ints, ints, ints)
def test_free_abelian_group_laws(a, b, c, d, e, f):
    x, y, z = z2(a, b), z2(c, d), z2(e, f)
    assert mul(mul(x, y), z) == mul(x, mul(y, z))
    assert mul(x, y) == mul(y, x)
    assert mul(x, x.inverse()).is_identity()


@given(st.lists(st.tuples(st.sampled_from("ab"), st.integers(-3, 3)), max_size=6),
       st.lists(st.tuples(st.sampled_from("ab"), st.integers(-3, 3)), max_size=6))
def test_free_group_inverse_and_length(w1, w2):
    F = free_group(["a", "b"])
    x = F.parse(" ".join(f"{g}^{k}" for g, k in w1 if k) or "e")
    y = F.parse(" ".join(f"{g}^{k}" for g, k in w2 if k) or "e")
    assert mul(x, x.inverse()).is_identity()
    assert word_distance(x, y) == word_distance(y, x)
    assert word_distance(x, mul(x, y)) == F.length_nf(y.nf)


def test_free_group_is_not_abelian():
    F = free_group(["a", "b"])
    a, b = F.parse("a"), F.parse("b")
    assert mul(a, b) != mul(b, a)


def test_s3_classes():
    G = symmetric3()
    assert G.order() == 6
    r = conjugacy_class(G.parse("r"))
    s = conjugacy_class(G.parse("s"))
    assert r.size == 2 and s.size == 3
    assert G.parse("r^2").nf in r.elements
    assert conjugacy_class(G.identity()).size == 1


def test_class_status_in_infinite_groups():
    F = free_group(["a", "b"])
    assert conjugacy_class(F.parse("a"), budget=500).status is not ClassStatus.FINITE
    G = direct_product(cyclic(2, "t"), free_abelian(["u"]))
    info = conjugacy_class(G.parse("t u^3"))
    assert info.is_finite and info.size == 1


def test_product_and_parse_roundtrip():
    G = direct_product(cyclic(2, "t"), free_abelian(["u"]))
    x = G.parse("t u^-2")
    assert G.format_nf(x.nf) == "t u^-2"
    assert mul(x, x) == G.parse("u^-4")
    with pytest.raises(GroupError):
        G.parse("w")


@given(ints, ints, st.integers(1, 12))
def test_reduction_is_a_homomorphism(a, b, n):
    G = direct_product(cyclic(2, "t"), free_abelian(["u"]))
    p = reduction_map(G, n)
    x, y = G.parse(f"t u^{a}"), G.parse(f"u^{b}")
    assert apply_quotient(p, mul(x, y)) == mul(apply_quotient(p, x), apply_quotient(p, y))


def test_reduction_image_order():
    p = reduction_map(free_abelian(["u"]), 7)
    assert p.target.order() == 7
    assert apply_quotient(p, p.source.parse("u^7")).is_identity()
