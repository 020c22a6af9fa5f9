from fractions import Fraction

import pytest

from bicausal_ot import distance_pp, make_space
from bicausal_ot._util import Interval, mv_le, root_value
from bicausal_ot.errors import DimensionMismatch, PrecisionBand

F = Fraction


def test_distance_zero_on_equal_paths():
    sp = make_space([[("a", (0,)), ("b", (1,))]] * 2)
    assert distance_pp(sp, sp, ("a", "b"), ("a", "b"), 1) == F(0)


def test_distance_one_dim_p1():
    sp = make_space([[("a", (0,)), ("b", (1,))]] * 2)
    assert distance_pp(sp, sp, ("a", "a"), ("b", "b"), 1) == F(2)


def test_distance_p2_sums_squares():
    # coordinates (0, 3) vs (4, 0) per step: 16 + 9 = 25 by hand
    sp = make_space([[("a", (0,)), ("b", (4,))], [("a", (3,)), ("b", (0,))]])
    assert distance_pp(sp, sp, ("a", "a"), ("b", "b"), 2) == F(25)


def test_distance_symmetry_and_self_zero():
    sp = make_space([[("a", (0,)), ("b", (F(1, 2),)), ("c", (2,))]] * 2)
    for x in sp.iter_paths():
        assert distance_pp(sp, sp, x, x, 1) == F(0)
        for y in sp.iter_paths():
            assert distance_pp(sp, sp, x, y, 1) == distance_pp(sp, sp, y, x, 1)


def test_distance_requires_equal_shapes():
    sp1 = make_space([[("a", (0,))]])
    sp2 = make_space([[("a", (0,))]] * 2)
    with pytest.raises(DimensionMismatch):
        distance_pp(sp1, sp2, ("a",), ("a", "a"), 1)


def test_multidim_even_power_is_exact():
    sp = make_space([[("a", (0, 0)), ("b", (1, 1))]])
    assert distance_pp(sp, sp, ("a",), ("b",), 2) == F(2)


def test_multidim_odd_power_is_directed_interval():
    sp = make_space([[("a", (0, 0)), ("b", (1, 1))]])
    value = distance_pp(sp, sp, ("a",), ("b",), 1)  # sqrt(2), irrational
    assert isinstance(value, Interval)
    assert value.hi - value.lo <= F(1, 10**12)
    assert value.lo**2 <= F(2) <= value.hi**2


def test_interval_comparisons_refuse_the_band():
    v = root_value(F(2), 2)
    assert mv_le(v, F(2))  # sqrt(2) <= 2 decidable
    assert not mv_le(F(2), v)
    with pytest.raises(PrecisionBand):
        mv_le(v, v)  # equal intervals overlap and are not points


def test_manhattan_steps_stay_exact():
    sp = make_space([[("a", (0, 0)), ("b", (1, 1))]], metric="manhattan")
    assert distance_pp(sp, sp, ("a",), ("b",), 1) == F(2)
    assert distance_pp(sp, sp, ("a",), ("b",), 3) == F(8)


def test_root_value_exact_on_perfect_squares():
    assert root_value(F(9, 4), 2) == F(3, 2)
    assert root_value(F(0), 2) == F(0)


def test_rational_exponent_is_exact_when_possible():
    sp = make_space([[("a", (0,)), ("b", (4,))]])
    # |0-4|^(3/2) = 8 exactly
    assert distance_pp(sp, sp, ("a",), ("b",), F(3, 2)) == F(8)
    sp2 = make_space([[("a", (0,)), ("b", (2,))]])
    value = distance_pp(sp2, sp2, ("a",), ("b",), F(3, 2))  # 2*sqrt(2)
    assert isinstance(value, Interval)
    assert value.lo**2 <= F(8) <= value.hi**2
