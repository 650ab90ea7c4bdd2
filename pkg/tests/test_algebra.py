import itertools

import pytest
from hypothesis import given, settings, strategies as st

from cycproof.algebra import (
    BOOLEANS,
    FAILURE,
    ActivationAlgebra,
    InvalidAlgebra,
    UnknownElement,
    join,
    leq,
    max_algebra,
    require_valid,
    validate,
)


def test_builtin_instances_are_valid():
    assert validate(BOOLEANS) is None
    assert validate(FAILURE) is None


def test_booleans_shape():
    assert BOOLEANS.size == 2
    assert BOOLEANS.alpha == 1
    assert join(BOOLEANS, 0, 0) == 0
    assert join(BOOLEANS, 0, 1) == 1


def test_failure_join_is_max():
    assert FAILURE.size == 3
    assert join(FAILURE, 1, 2) == 2
    assert join(FAILURE, 1, 1) == 1
    assert join(FAILURE, 0, 2) == 2


def test_alpha_equal_zero_rejected():
    bad = max_algebra(("0", "1"), alpha=0)
    violation = validate(bad)
    assert violation is not None and violation.law == "alpha!=0"
    with pytest.raises(InvalidAlgebra):
        require_valid(bad)


def test_unknown_element():
    with pytest.raises(UnknownElement):
        join(BOOLEANS, 0, 7)


def test_derived_order():
    assert leq(FAILURE, 0, 2)
    assert not leq(FAILURE, 2, 1)
    assert leq(BOOLEANS, 1, 1)


def _laws_brute_force(alg: ActivationAlgebra) -> bool:
    n = alg.size
    if alg.alpha == 0 or not 0 <= alg.alpha < n:
        return False
    for a, b in itertools.product(range(n), repeat=2):
        if alg.table[a][b] != alg.table[b][a] or not 0 <= alg.table[a][b] < n:
            return False
    for a in range(n):
        if alg.table[a][a] != a or alg.table[0][a] != a:
            return False
    for a, b, c in itertools.product(range(n), repeat=3):
        if alg.table[alg.table[a][b]][c] != alg.table[a][alg.table[b][c]]:
            return False
    return True


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_validate_agrees_with_law_enumerator(data):
    n = data.draw(st.integers(min_value=1, max_value=4))
    table = tuple(
        tuple(data.draw(st.integers(min_value=0, max_value=n - 1)) for _ in range(n))
        for _ in range(n)
    )
    alpha = data.draw(st.integers(min_value=0, max_value=n - 1))
    alg = ActivationAlgebra(names=tuple(str(i) for i in range(n)), table=table, alpha=alpha)
    assert (validate(alg) is None) == _laws_brute_force(alg)


def test_oversized_algebra_rejected():
    alg = max_algebra(tuple(str(i) for i in range(17)), alpha=1)
    violation = validate(alg)
    assert violation is not None and violation.law == "carrier too large"
