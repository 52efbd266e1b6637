"""Closed-form evaluation of tessellated kernels.

A tessellated kernel is defined by the integral

    k(x, y) = integral over the box [a, b] of  N(z, x)^T P N(z, y) dz

where P is PSD and the feature map N stacks two blocks of monomials in
(z, x), the first gated by the indicator of ``z >= x`` componentwise and
the second by ``z <= x``.  Because the gated monomials integrate in closed
form over axis-aligned regions, k(x, y) is a finite sum of products of
one-dimensional polynomial integrals: every entry of the per-pair block
matrix G(x, y) (one entry per pair of feature-map components) is a
monomial prefactor times a product over axes of

    (hi^c - lo^c) / c

for region bounds (lo, hi) determined by componentwise max / min of x and
y.  ``kernel_quadrature`` integrates the defining integral numerically on
a midpoint tensor grid and serves as the ground-truth oracle for all
closed forms.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import DomainBox, TKBasis


def int_pow(x, e):
    """x**e for small nonnegative integer e by repeated multiplication."""
    if e == 0:
        return np.ones_like(np.asarray(x, dtype=float))
    if e <= 6:
        out = np.asarray(x, dtype=float).copy()
        for _ in range(e - 1):
            out = out * x
        return out
    return np.power(np.asarray(x, dtype=float), e)


def t_function(x, y, zeta):
    """Product over axes of (y_j^zeta_j - x_j^zeta_j) / zeta_j.

    The one-dimensional factors are the integrals of z^(zeta_j - 1) from
    x_j to y_j; zeta must be >= 1 elementwise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    zeta = np.atleast_1d(np.asarray(zeta, dtype=np.int64))
    out = 1.0
    for xj, yj, zj in zip(x, y, zeta):
        if zj < 1:
            raise ValueError("t_function exponents must be >= 1")
        out *= (int_pow(yj, int(zj)) - int_pow(xj, int(zj))) / float(zj)
    return float(out)


@dataclass(frozen=True)
class KernelParams:
    """A tessellated kernel: basis + box + PSD parameter matrix.

    ``P`` has dimension q_p x q_p with q_p = 2 * q_z; the four q_z x q_z
    blocks weight the four indicator-region combinations.
    """

    basis: TKBasis
    domain: DomainBox
    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        q_p = self.basis.q_p
        if P.shape != (q_p, q_p):
            raise ValueError(f"P must be {q_p}x{q_p}, got {P.shape}")
        if self.domain.n != self.basis.n:
            raise ValueError("domain dimension does not match basis")
        object.__setattr__(self, "P", P)

    def validate(self, require_trace=False, sym_tol=1e-12, psd_tol=1e-8, trace_tol=1e-9):
        """Raise ValueError if P is not symmetric PSD (and optionally trace q_p)."""
        P = self.P
        scale = max(1.0, float(np.max(np.abs(P))))
        asym = float(np.max(np.abs(P - P.T)))
        if asym > sym_tol * scale:
            raise ValueError(f"P asymmetry {asym:.3e} exceeds tolerance")
        w = np.linalg.eigvalsh(0.5 * (P + P.T))
        lo, hi = float(w[0]), float(w[-1])
        if lo < -psd_tol * max(1.0, hi):
            raise ValueError(f"P has eigenvalue {lo:.3e}; not PSD within tolerance")
        if require_trace:
            tr = float(np.trace(P))
            q_p = self.basis.q_p
            if abs(tr - q_p) > trace_tol * q_p:
                raise ValueError(f"trace(P) = {tr!r}, expected {q_p}")


def identity_params(basis, domain):
    """The initial kernel: P = identity (trace equals its dimension)."""
    return KernelParams(basis=basis, domain=domain, P=np.eye(basis.q_p))


def region_integrals(basis, i, j, x, y, domain):
    """The four closed-form integrals for basis-pair (i, j) at points (x, y).

    Returns (upper, between_xy, between_yx, lower):
      upper       -- integral over { z >= x and z >= y }  (from max(x,y) to b)
      between_xy  -- integral over { x <= z <= y }
      between_yx  -- integral over { y <= z <= x }
      lower       -- integral over { z <= x and z <= y }  (from a to min(x,y))

    Each value includes the monomial prefactor x^dx_i * y^dx_j; the z
    exponent of the integrand is dz_i + dz_j.  Empty regions integrate
    to zero (per-axis max/min bounds make the factors vanish).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    dx_i, dz_i = basis.pairs[i]
    dx_j, dz_j = basis.pairs[j]
    pref = 1.0
    upper = 1.0
    t_xy = 1.0
    t_yx = 1.0
    lower = 1.0
    for ax in range(basis.n):
        pref *= float(int_pow(x[ax], dx_i[ax])) * float(int_pow(y[ax], dx_j[ax]))
        c = dz_i[ax] + dz_j[ax] + 1
        mx = max(x[ax], y[ax])
        mn = min(x[ax], y[ax])
        bp = float(int_pow(domain.b[ax], c))
        ap = float(int_pow(domain.a[ax], c))
        mxp = float(int_pow(mx, c))
        mnp = float(int_pow(mn, c))
        upper *= (bp - mxp) / c
        t_xy *= (mxp - float(int_pow(x[ax], c))) / c
        t_yx *= (mxp - float(int_pow(y[ax], c))) / c
        lower *= (mnp - ap) / c
    return pref * upper, pref * t_xy, pref * t_yx, pref * lower


def pair_block(basis, domain, x, y):
    """The q_p x q_p block matrix G(x, y) of feature-pair integrals.

    Entry (I, J) is the integral of the (I, J) feature-map product; the
    contraction sum(P * G(x, y)) equals the kernel value by definition.
    Satisfies G(x, y)^T = G(y, x).
    """
    q_z = basis.q_z
    G = np.empty((2 * q_z, 2 * q_z), dtype=float)
    for i in range(q_z):
        for j in range(q_z):
            upper, t_xy, t_yx, lower = region_integrals(basis, i, j, x, y, domain)
            G[i, j] = upper
            G[i, q_z + j] = t_xy
            G[q_z + i, j] = t_yx
            G[q_z + i, q_z + j] = lower
    return G


def eval_kernel(params, x, y):
    """Kernel value at a single pair, contracted entrywise against P."""
    return float(np.sum(params.P * pair_block(params.basis, params.domain, x, y)))


@lru_cache(maxsize=32)
def exponent_classes(basis):
    """Group basis index pairs (i, j) by their z-integral exponent vector.

    Returns a tuple of (c_vector, mask) where c = dz_i + dz_j + 1 and mask
    is the q_z x q_z boolean selector of pairs in the class.  The number of
    classes is small (at most binomial(n + 2d, 2d)), which lets the
    pairwise engine share each per-class product of axis integrals across
    all basis pairs in the class.
    """
    dz = basis.z_exponents
    csum = dz[:, None, :] + dz[None, :, :] + 1
    flat = csum.reshape(-1, basis.n)
    keys = [tuple(int(v) for v in row) for row in flat]
    classes = {}
    for idx, key in enumerate(keys):
        classes.setdefault(key, []).append(idx)
    out = []
    for key in sorted(classes):
        mask = np.zeros(basis.q_z * basis.q_z, dtype=bool)
        mask[classes[key]] = True
        out.append((key, mask.reshape(basis.q_z, basis.q_z)))
    return tuple(out)


class _BudgetCache:
    """First-come array memo bounded by a byte budget."""

    def __init__(self, budget_bytes):
        self.budget = budget_bytes
        self.used = 0
        self._store = {}

    def get(self, key, build):
        hit = self._store.get(key)
        if hit is not None:
            return hit
        arr = build()
        if self.used + arr.nbytes <= self.budget:
            self._store[key] = arr
            self.used += arr.nbytes
        return arr


class BlockContractor:
    """Vectorized pairwise block contractions between point sets X and Y.

    Computes, without materializing the full (q_p, q_p, m, mY) tensor,

      * ``kernel_matrix(P)``: the m x mY matrix of kernel values, and
      * ``weighted_block_sum(w)``: the q_p x q_p sum over point pairs of
        ``w_k w_l G(x_k, y_l)`` (X is Y for this use).

    Per-axis power matrices are memoized under a byte budget since X is
    fixed for the lifetime of a training run.
    """

    def __init__(self, basis, domain, X, Y=None, cache_budget_bytes=1 << 30):
        self.basis = basis
        self.domain = domain
        self.X = np.atleast_2d(np.asarray(X, dtype=float))
        self.Y = self.X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        if self.X.shape[1] != basis.n or self.Y.shape[1] != basis.n:
            raise ValueError("point sets must have basis.n columns")
        self._cache = _BudgetCache(cache_budget_bytes)
        self._classes = exponent_classes(basis)
        dxp = basis.x_exponents
        self._xpow = self._monomials(self.X, dxp)  # (q_z, m)
        self._ypow = self._monomials(self.Y, dxp)  # (q_z, mY)
        # componentwise max/min over all point pairs, per axis
        self._mx = [np.maximum.outer(self.X[:, a], self.Y[:, a]) for a in range(basis.n)]
        self._mn = [np.minimum.outer(self.X[:, a], self.Y[:, a]) for a in range(basis.n)]

    @staticmethod
    def _monomials(pts, exps):
        out = np.ones((exps.shape[0], pts.shape[0]))
        for i in range(exps.shape[0]):
            for a in range(exps.shape[1]):
                e = int(exps[i, a])
                if e:
                    out[i] = out[i] * int_pow(pts[:, a], e)
        return out

    def _pairpow(self, which, axis, c):
        src = self._mx if which == "mx" else self._mn
        return self._cache.get((which, axis, c), lambda: int_pow(src[axis], c))

    def _region_products(self, cvec):
        """Products over axes of the four per-axis integral matrices for class c."""
        a, b = self.domain.a, self.domain.b
        upper = 1.0
        t_xy = 1.0
        t_yx = 1.0
        lower = 1.0
        for ax, c in enumerate(cvec):
            mxp = self._pairpow("mx", ax, c)
            mnp = self._pairpow("mn", ax, c)
            xc = int_pow(self.X[:, ax], c)[:, None]
            yc = int_pow(self.Y[:, ax], c)[None, :]
            upper = upper * ((float(int_pow(b[ax], c)) - mxp) / c)
            t_xy = t_xy * ((mxp - xc) / c)
            t_yx = t_yx * ((mxp - yc) / c)
            lower = lower * ((mnp - float(int_pow(a[ax], c))) / c)
        return upper, t_xy, t_yx, lower

    def kernel_matrix(self, P):
        """m x mY kernel matrix for the PSD parameter matrix P."""
        q_z = self.basis.q_z
        P = np.asarray(P, dtype=float)
        blocks = (
            P[:q_z, :q_z],      # pairs with both features gated z >= point
            P[:q_z, q_z:],      # first z >= x, second z <= y
            P[q_z:, :q_z],      # first z <= x, second z >= y
            P[q_z:, q_z:],      # both gated z <= point
        )
        K = np.zeros((self.X.shape[0], self.Y.shape[0]))
        for cvec, mask in self._classes:
            regions = self._region_products(cvec)
            for blk, A in zip(blocks, regions):
                sel = blk * mask
                if not np.any(sel):
                    continue
                K += (self._xpow.T @ sel @ self._ypow) * A
        return K

    def weighted_block_sum(self, w_x, w_y=None):
        """Sum over point pairs of w_k w_l G(x_k, y_l), a q_p x q_p matrix."""
        if w_y is None:
            w_y = w_x
        q_z = self.basis.q_z
        WX = self._xpow * np.asarray(w_x, dtype=float)[None, :]
        WY = self._ypow * np.asarray(w_y, dtype=float)[None, :]
        M = np.zeros((2 * q_z, 2 * q_z))
        for cvec, mask in self._classes:
            upper, t_xy, t_yx, lower = self._region_products(cvec)
            M[:q_z, :q_z] += mask * (WX @ upper @ WY.T)
            M[:q_z, q_z:] += mask * (WX @ t_xy @ WY.T)
            M[q_z:, :q_z] += mask * (WX @ t_yx @ WY.T)
            M[q_z:, q_z:] += mask * (WX @ lower @ WY.T)
        return M


def kernel_matrix(params, X, Y=None, cache_budget_bytes=1 << 30):
    """Kernel matrix between point sets (rows of X and Y) for given params."""
    eng = BlockContractor(params.basis, params.domain, X, Y, cache_budget_bytes)
    return eng.kernel_matrix(params.P)


def gram_matrix(params, X):
    """Symmetric Gram matrix of the kernel on the rows of X."""
    K = kernel_matrix(params, X)
    return 0.5 * (K + K.T)


def _feature_map(basis, Z, x):
    """Feature map N(z, x) evaluated at all rows of Z; shape (q_p, len(Z))."""
    xpow = np.ones(basis.q_z)
    dxp = basis.x_exponents
    for i in range(basis.q_z):
        for a in range(basis.n):
            xpow[i] *= float(int_pow(x[a], int(dxp[i, a])))
    zpow = np.ones((basis.q_z, Z.shape[0]))
    dzp = basis.z_exponents
    for i in range(basis.q_z):
        for a in range(basis.n):
            e = int(dzp[i, a])
            if e:
                zpow[i] = zpow[i] * int_pow(Z[:, a], e)
    ge = np.all(Z >= x[None, :], axis=1).astype(float)
    le = np.all(Z <= x[None, :], axis=1).astype(float)
    block = xpow[:, None] * zpow
    return np.vstack([block * ge[None, :], block * le[None, :]])


def kernel_quadrature(params, x, y, grid):
    """Midpoint tensor-grid approximation of the defining kernel integral.

    Ground-truth oracle for the closed forms.  The integrand has jump
    discontinuities on the axis-aligned planes through x and y, so the
    rule converges at rate O(1/grid).  Refuses n > 3 (tensor-grid cost).
    """
    basis, domain = params.basis, params.domain
    if basis.n > 3:
        raise ValueError("quadrature oracle supports n <= 3 only")
    if grid < 2:
        raise ValueError("grid must be >= 2")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    axes = [
        domain.a[a] + (np.arange(grid) + 0.5) * (domain.b[a] - domain.a[a]) / grid
        for a in range(basis.n)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    Z = np.stack([m.ravel() for m in mesh], axis=1)
    cell = float(np.prod((domain.b - domain.a) / grid))
    Nx = _feature_map(basis, Z, x)
    Ny = _feature_map(basis, Z, y)
    return float(np.sum(Nx * (params.P @ Ny)) * cell)
