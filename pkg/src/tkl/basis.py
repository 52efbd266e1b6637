"""Monomial basis enumeration for tessellated kernels.

A tessellated kernel on n features of degree d is parameterized by a PSD
matrix acting on a feature map with two blocks of ``q_z`` monomials each,
where the monomial exponents range over all pairs ``(dx, dz)`` of
nonnegative integer n-vectors with ``|dx| + |dz| <= d``.  ``dx`` is the
exponent applied to the data point and ``dz`` the exponent applied to the
integration variable.  The enumeration order is graded lexicographic so
that serialized parameter matrices index identically everywhere.
"""

from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np

ORDERING_TAG = "graded-lex"


@dataclass(frozen=True)
class TKBasis:
    """Ordered exponent pairs defining the kernel feature map.

    ``pairs[i] = (dx_i, dz_i)``, each a length-n tuple of ints.  ``q_z`` is
    the number of pairs; the PSD parameter matrix has dimension
    ``q_p = 2 * q_z``.
    """

    n: int
    d: int
    pairs: tuple = field(repr=False)

    @property
    def q_z(self):
        return len(self.pairs)

    @property
    def q_p(self):
        return 2 * len(self.pairs)

    @property
    def x_exponents(self):
        """(q_z, n) int array of data-point exponents."""
        return np.array([p[0] for p in self.pairs], dtype=np.int64)

    @property
    def z_exponents(self):
        """(q_z, n) int array of integration-variable exponents."""
        return np.array([p[1] for p in self.pairs], dtype=np.int64)


def build_basis(n, d):
    """Enumerate all exponent pairs with total degree <= d, graded-lex order.

    Graded: lower total degree first.  Within a degree, plain lexicographic
    order on the concatenated vector (dx_1..dx_n, dz_1..dz_n).  The count is
    binomial(2n + d, d).
    """
    if n < 1:
        raise ValueError(f"feature dimension must be >= 1, got {n}")
    if d < 0:
        raise ValueError(f"degree must be >= 0, got {d}")
    pairs = []
    for exps in product(range(d + 1), repeat=2 * n):
        if sum(exps) <= d:
            pairs.append(exps)
    pairs.sort(key=lambda e: (sum(e), e))
    out = tuple((e[:n], e[n:]) for e in pairs)
    assert len(out) == comb(2 * n + d, d)
    return TKBasis(n=n, d=d, pairs=out)


@dataclass(frozen=True)
class DomainBox:
    """Axis-aligned integration box [a, b], a < b strictly per axis."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 1 or b.shape != a.shape:
            raise ValueError("box corners must be 1-D arrays of equal length")
        if not np.all(a < b):
            raise ValueError("box requires a < b strictly in every axis")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.shape[0]

    def clip(self, X):
        """Clamp points to the box, returning (clipped, clamp_count)."""
        X = np.asarray(X, dtype=float)
        clipped = np.clip(X, self.a, self.b)
        return clipped, int(np.sum(clipped != X))
