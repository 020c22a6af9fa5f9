from fractions import Fraction

import pytest

from bicausal_ot import Coupling, PathMeasure, make_space


def F(*args):
    return Fraction(*args)


def binary_space(n_steps=2, coords=(0, 1)):
    step = [("a", (Fraction(coords[0]),)), ("b", (Fraction(coords[1]),))]
    return make_space([step] * n_steps)


def measure(space, table):
    """table: {path-as-string-or-tuple: Fraction}"""
    mass = {}
    for key, value in table.items():
        path = tuple(key) if not isinstance(key, tuple) else key
        mass[path] = Fraction(value)
    return PathMeasure(space, mass)


def coupling(left, right, table):
    mass = {}
    for (x, y), value in table.items():
        mass[(tuple(x), tuple(y))] = Fraction(value)
    return Coupling(left, right, mass)


def comonotone_table(row, col):
    """Quantile pairing of two one-step mass dicts in label order.

    Independent helper used by tests to build stepwise quantile couplings.
    """
    rows = list(row.items())
    cols = list(col.items())
    out = {}
    i = j = 0
    ri = rows[0][1] if rows else Fraction(0)
    cj = cols[0][1] if cols else Fraction(0)
    while i < len(rows) and j < len(cols):
        take = min(ri, cj)
        if take > 0:
            key = (rows[i][0], cols[j][0])
            out[key] = out.get(key, Fraction(0)) + take
        ri -= take
        cj -= take
        if ri == 0:
            i += 1
            if i < len(rows):
                ri = rows[i][1]
        if cj == 0:
            j += 1
            if j < len(cols):
                cj = cols[j][1]
    return out


@pytest.fixture
def coin2():
    """Uniform 2-step fair-coin measure on the binary space."""
    sp = binary_space()
    q = Fraction(1, 4)
    return measure(sp, {("a", "a"): q, ("a", "b"): q, ("b", "a"): q, ("b", "b"): q})
