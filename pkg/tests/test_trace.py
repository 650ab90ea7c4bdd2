import pytest
from hypothesis import given, settings, strategies as st

from cycproof.algebra import BOOLEANS, FAILURE
from cycproof.trace import (
    ObjectMismatch,
    TraceObject,
    compose,
    compose_word,
    identity,
    is_valid_path,
    morphism,
)

X = TraceObject("X", ("x",))
XY = TraceObject("XY", ("x", "y"))
PQ = TraceObject("PQ", ("p", "q"))


def test_compose_joins_labels_failure():
    first = morphism(X, X, [(0, 1, 0)], alg=FAILURE)
    second = morphism(X, X, [(0, 1, 0)], alg=FAILURE)
    assert compose(FAILURE, first, second).triples == ((0, 1, 0),)
    third = morphism(X, X, [(0, 2, 0)], alg=FAILURE)
    assert compose(FAILURE, first, third).triples == ((0, 2, 0),)


def test_compose_keeps_parallel_labels():
    first = morphism(X, X, [(0, 0, 0), (0, 1, 0)], alg=BOOLEANS)
    second = morphism(X, X, [(0, 0, 0)], alg=BOOLEANS)
    assert compose(BOOLEANS, first, second).triples == ((0, 0, 0), (0, 1, 0))


def test_compose_requires_chaining():
    f = morphism(X, XY, [(0, 0, 0)], alg=BOOLEANS)
    with pytest.raises(ObjectMismatch):
        compose(BOOLEANS, f, f)


def test_identity_shape():
    ident = identity(PQ)
    assert ident.triples == ((0, 0, 0), (1, 0, 1))


def test_identity_laws():
    r = morphism(XY, PQ, [(0, 1, 1), (1, 0, 0)], alg=BOOLEANS)
    assert compose(BOOLEANS, identity(XY), r) == r
    assert compose(BOOLEANS, r, identity(PQ)) == r


def test_valid_path():
    r = morphism(X, XY, [(0, 0, 0)], alg=BOOLEANS)
    s = morphism(XY, PQ, [(0, 0, 1)], alg=BOOLEANS)
    assert is_valid_path([])
    assert is_valid_path([r, s])
    assert not is_valid_path([r, r])


def test_triple_bounds_checked():
    from cycproof.algebra import UnknownElement

    with pytest.raises(ValueError):
        morphism(X, X, [(1, 0, 0)])
    with pytest.raises(UnknownElement):
        morphism(X, X, [(0, 5, 0)], alg=BOOLEANS)


def _random_morphism(data, alg, dom, cod):
    triples = []
    for x in range(dom.size):
        for a in alg.elements:
            for y in range(cod.size):
                if data.draw(st.booleans()):
                    triples.append((x, a, y))
    return morphism(dom, cod, triples, alg=alg)


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_category_laws(data):
    alg = data.draw(st.sampled_from([BOOLEANS, FAILURE]))
    sizes = [data.draw(st.integers(min_value=1, max_value=3)) for _ in range(4)]
    objs = [TraceObject(f"A{i}", tuple(f"e{j}" for j in range(n))) for i, n in enumerate(sizes)]
    f = _random_morphism(data, alg, objs[0], objs[1])
    g = _random_morphism(data, alg, objs[1], objs[2])
    h = _random_morphism(data, alg, objs[2], objs[3])
    left = compose(alg, compose(alg, f, g), h)
    right = compose(alg, f, compose(alg, g, h))
    assert left == right
    assert compose(alg, identity(objs[0]), f) == f
    assert compose(alg, f, identity(objs[1])) == f
    # triple count bound and label closure
    assert len(left.triples) <= objs[0].size * alg.size * objs[3].size
    assert all(0 <= a < alg.size for (_, a, _) in left.triples)


def test_compose_word():
    r = morphism(X, X, [(0, 1, 0)], alg=BOOLEANS)
    assert compose_word(BOOLEANS, [r, r, r]).triples == ((0, 1, 0),)
    with pytest.raises(ValueError):
        compose_word(BOOLEANS, [])
