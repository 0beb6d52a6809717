"""Exterior algebra on flat Minkowski space with signature (-,+,+,+).

Coordinates are (t, x, y, z) = (x^0, x^1, x^2, x^3) and the volume form is
``*1 = e0^e1^e2^e3``.  A p-form is stored as a ``Form`` whose last array axis
holds the coefficients on a fixed ordered basis:

====== =========================================================
degree basis
====== =========================================================
0      1
1      e0, e1, e2, e3
2      e0^e1, e0^e2, e0^e3, e2^e3, e3^e1, e1^e2
3      e0^e2^e3, e0^e3^e1, e0^e1^e2, e1^e2^e3
4      e0^e1^e2^e3
====== =========================================================

Leading axes broadcast, so a single ``Form`` can carry a whole point cloud.

Sign conventions (every other module goes through ``from_EB``/``to_EB``):
the Faraday form ``F = dt^E + *(dt^B)`` has coefficients
``(Ex, Ey, Ez, -Bx, -By, -Bz)``, and ``*F = from_EB(-B, E)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

__all__ = [
    "BASIS",
    "METRIC",
    "Form",
    "basis_form",
    "exterior_derivative",
    "from_EB",
    "hodge",
    "invariants",
    "invariants_via_forms",
    "scalar",
    "to_EB",
    "wedge",
    "wedge22",
]

METRIC = np.array([-1.0, 1.0, 1.0, 1.0])

BASIS = {
    0: ((),),
    1: ((0,), (1,), (2,), (3,)),
    2: ((0, 1), (0, 2), (0, 3), (2, 3), (3, 1), (1, 2)),
    3: ((0, 2, 3), (0, 3, 1), (0, 1, 2), (1, 2, 3)),
    4: ((0, 1, 2, 3),),
}


def _parity(seq):
    inversions = sum(1 for a, b in combinations(seq, 2) if a > b)
    return -1 if inversions % 2 else 1


def _locate(indices):
    """Position and sign of ``e^{i1}^...^e^{ip}`` on the stored basis."""
    if len(set(indices)) != len(indices):
        return None
    p = len(indices)
    for k, ref in enumerate(BASIS[p]):
        if set(ref) == set(indices):
            return k, _parity(indices) * _parity(ref)
    raise AssertionError(indices)


@lru_cache(maxsize=None)
def _wedge_table(p, q):
    table = []
    for i, a in enumerate(BASIS[p]):
        for j, b in enumerate(BASIS[q]):
            hit = _locate(a + b)
            if hit is not None:
                table.append((i, j, hit[0], hit[1]))
    return tuple(table)


@lru_cache(maxsize=None)
def _hodge_table(p):
    # *e^I = eta_I * sgn(I ++ J) e^J with J the complementary basis element
    table = []
    for i, a in enumerate(BASIS[p]):
        k, _ = _locate(tuple(sorted(set(range(4)) - set(a))))
        b = BASIS[4 - p][k]
        eta = float(np.prod(METRIC[list(a)])) if a else 1.0
        table.append((k, eta * _parity(a + b)))
    return tuple(table)


@dataclass(frozen=True)
class Form:
    """A p-form on Minkowski space; ``coeffs[..., k]`` multiplies ``BASIS[degree][k]``."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if not 0 <= self.degree <= 4:
            raise ValueError(f"degree must be in 0..4, got {self.degree}")
        if c.shape[-1:] != (len(BASIS[self.degree]),):
            raise ValueError(
                f"a {self.degree}-form needs {len(BASIS[self.degree])} coefficients, "
                f"got shape {c.shape}"
            )
        object.__setattr__(self, "coeffs", c)

    def _check(self, other):
        if not isinstance(other, Form) or other.degree != self.degree:
            raise TypeError("can only combine forms of equal degree")

    def __add__(self, other):
        self._check(other)
        return Form(self.degree, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return Form(self.degree, self.coeffs - other.coeffs)

    def __neg__(self):
        return Form(self.degree, -self.coeffs)

    def __mul__(self, s):
        # s may be a scalar or an array matching the leading (point) axes
        return Form(self.degree, self.coeffs * np.asarray(s, dtype=float)[..., None])

    __rmul__ = __mul__


def basis_form(degree, k):
    c = np.zeros(len(BASIS[degree]))
    c[k] = 1.0
    return Form(degree, c)


def scalar(value):
    """A 0-form."""
    return Form(0, np.asarray(value, dtype=float)[..., None])


def wedge(a: Form, b: Form) -> Form:
    p, q = a.degree, b.degree
    if p + q > 4:
        raise ValueError(f"no {p + q}-forms in four dimensions")
    shape = np.broadcast_shapes(a.coeffs.shape[:-1], b.coeffs.shape[:-1])
    out = np.zeros(shape + (len(BASIS[p + q]),))
    for i, j, k, sign in _wedge_table(p, q):
        out[..., k] += sign * a.coeffs[..., i] * b.coeffs[..., j]
    return Form(p + q, out)


def wedge22(a: Form, b: Form) -> Form:
    """Wedge of two 2-forms; symmetric, returns a 4-form (coefficient of *1)."""
    if a.degree != 2 or b.degree != 2:
        raise TypeError("wedge22 takes two 2-forms")
    return wedge(a, b)


def hodge(w: Form) -> Form:
    p = w.degree
    out = np.zeros(w.coeffs.shape[:-1] + (len(BASIS[4 - p]),))
    for i, (k, sign) in enumerate(_hodge_table(p)):
        out[..., k] += sign * w.coeffs[..., i]
    return Form(4 - p, out)


def exterior_derivative(partials: np.ndarray, degree: int) -> Form:
    """``d`` of a p-form field given the partial derivatives of its coefficients.

    ``partials[..., a, k]`` is the derivative along x^a of coefficient k.
    """
    partials = np.asarray(partials, dtype=float)
    total = None
    for a in range(4):
        term = wedge(basis_form(1, a), Form(degree, partials[..., a, :]))
        total = term if total is None else total + term
    return total


def from_EB(E, B) -> Form:
    """Faraday 2-form ``dt^E + *(dt^B)`` from 3-vectors (last axis of length 3)."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    E, B = np.broadcast_arrays(E, B)
    return Form(2, np.concatenate([E, -B], axis=-1))


def to_EB(F: Form):
    if F.degree != 2:
        raise TypeError("to_EB takes a 2-form")
    return F.coeffs[..., :3].copy(), -F.coeffs[..., 3:]


def invariants(E, B):
    """``X = E^2 - B^2`` and ``Y = 2 E.B``."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    # explicit components: reductions over a length-3 axis are slow in numpy
    ex, ey, ez = E[..., 0], E[..., 1], E[..., 2]
    bx, by, bz = B[..., 0], B[..., 1], B[..., 2]
    X = (ex * ex + ey * ey + ez * ez) - (bx * bx + by * by + bz * bz)
    Y = 2.0 * (ex * bx + ey * by + ez * bz)
    return X, Y


def invariants_via_forms(E, B):
    """``X = *(F ^ *F)`` and ``Y = *(F ^ F)`` evaluated through the kernel."""
    F = from_EB(E, B)
    X = hodge(wedge22(F, hodge(F))).coeffs[..., 0]
    Y = hodge(wedge22(F, F)).coeffs[..., 0]
    return X, Y
