"""Small symmetric-matrix algebra and chi-square / F upper tails.

Everything here works at the 4x4 scale of a 2x2 factorial layout, so the
routines favour clarity over asymptotic speed.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidInputError

_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 200_000


class SymMatrix:
    """Dense real symmetric matrix.

    The input is symmetrized as ``(a + a.T) / 2`` on construction, so the
    stored entries are symmetric exactly.
    """

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = np.array(entries, dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise InvalidInputError("matrix dimension must be positive")
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("matrix contains NaN or infinite entries")
        a = 0.5 * (a + a.T)
        a.setflags(write=False)
        self._a = a

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self._a

    def __array__(self, dtype=None, copy=None):
        return self._a.astype(dtype) if dtype is not None else self._a.copy()

    def __matmul__(self, other):
        other = other.array if isinstance(other, SymMatrix) else np.asarray(other)
        return self._a @ other

    def __eq__(self, other):
        if not isinstance(other, SymMatrix):
            return NotImplemented
        return self._a.shape == other._a.shape and bool(np.all(self._a == other._a))

    def __repr__(self):
        return f"SymMatrix({self._a.tolist()!r})"

    @classmethod
    def identity(cls, dim: int) -> SymMatrix:
        return cls(np.eye(dim))

    @classmethod
    def diag(cls, values) -> SymMatrix:
        return cls(np.diag(np.asarray(values, dtype=float)))


def jacobi_eigh(m: SymMatrix, tol: float = 1e-15, max_sweeps: int = 64):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(w, v)`` with eigenvalues ``w`` in ascending order and the
    matching orthonormal eigenvectors in the columns of ``v``.
    """
    a = np.array(m.array, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return np.zeros(n), v
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(a, 1) ** 2)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J' A J on rows/cols p, q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def pseudo_inverse(m: SymMatrix, tol_rel: float = 1e-12) -> SymMatrix:
    """Moore-Penrose inverse of a symmetric positive semidefinite matrix.

    Eigenvalues at or below ``tol_rel * max(eigenvalue)`` (including small
    negative round-off) are treated as zero.
    """
    if not isinstance(m, SymMatrix):
        m = SymMatrix(m)
    scale = float(np.max(np.abs(m.array)))
    if scale == 0.0:
        return SymMatrix(np.zeros((m.dim, m.dim)))
    # pinv(s * A) = pinv(A) / s; decomposing A / s keeps tiny entries representable
    w, v = jacobi_eigh(SymMatrix(m.array / scale))
    lam_max = float(np.max(w))
    if lam_max <= 0.0:
        return SymMatrix(np.zeros((m.dim, m.dim)))
    keep = w > tol_rel * lam_max
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    out = ((v * inv) @ v.T) / scale
    if not np.all(np.isfinite(out)):
        raise InvalidInputError("pseudo-inverse overflows: matrix entries are too small")
    return SymMatrix(out)


# ---------------------------------------------------------------------------
# Regularized incomplete gamma / beta
# ---------------------------------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    """Lower regularized gamma P(a, x) by its power series (x < a + 1)."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    """Upper regularized gamma Q(a, x) by modified Lentz continued fraction."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammaincc(a: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(a, x)."""
    if a <= 0:
        raise InvalidInputError("shape parameter must be positive")
    if x < 0 or math.isnan(x):
        raise InvalidInputError("x must be non-negative")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_series(a, x)))
    return min(1.0, max(0.0, _gamma_cf(a, x)))


def _beta_cf(a: float, b: float, x: float) -> float:
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h


def _stirling_tail(z: float) -> float:
    """lgamma(z) minus its Stirling leading terms, valid for z >= 100."""
    z2 = z * z
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * z2)) / z2) / z2) / z


def _lbeta(a: float, b: float) -> float:
    """log B(a, b), avoiding cancellation between large lgamma values."""
    x, y = min(a, b), max(a, b)
    if y < 100.0:
        return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    # lgamma(y) - lgamma(x + y) expanded around y
    diff = (
        -(x + y - 0.5) * math.log1p(x / y) + x
        + _stirling_tail(y) - _stirling_tail(x + y)
    )
    if x >= 100.0:
        # both large: lgamma(x) by Stirling as well
        lgx = (x - 0.5) * math.log(x) - x + 0.5 * math.log(2.0 * math.pi) + _stirling_tail(x)
    else:
        lgx = math.lgamma(x)
    return lgx - x * math.log(y) + diff


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise InvalidInputError("beta parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise InvalidInputError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = a * math.log(x) + b * math.log1p(-x) - _lbeta(a, b)
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        val = front * _beta_cf(a, b, x) / a
    else:
        val = 1.0 - front * _beta_cf(b, a, 1.0 - x) / b
    return min(1.0, max(0.0, val))


def chi2_sf(x: float, k: float) -> float:
    """P(chi2_k > x)."""
    x = float(x)
    if math.isnan(x) or x < 0:
        raise InvalidInputError(f"chi2_sf needs x >= 0, got {x}")
    if not k > 0:
        raise InvalidInputError(f"degrees of freedom must be positive, got {k}")
    return gammaincc(0.5 * k, 0.5 * x)


def f_sf(x: float, f1: float, f2: float) -> float:
    """P(F_{f1, f2} > x); the degrees of freedom may be non-integer."""
    x = float(x)
    if not (f1 > 0 and f2 > 0) or math.isnan(f1) or math.isnan(f2):
        raise InvalidInputError(f"F degrees of freedom must be positive, got ({f1}, {f2})")
    if math.isnan(x) or x < 0:
        raise InvalidInputError(f"f_sf needs x >= 0, got {x}")
    if x == 0.0:
        return 1.0
    if math.isinf(x):
        return 0.0
    if math.isinf(f2):
        return chi2_sf(f1 * x, f1)
    # P(F > x) = I_{f2 / (f2 + f1 x)}(f2/2, f1/2); complementary form when
    # that argument is close to 1 keeps precision in the upper tail.
    denom = f2 + f1 * x
    z = f2 / denom
    if z > 0.5:
        return 1.0 - betainc(0.5 * f1, 0.5 * f2, f1 * x / denom)
    return betainc(0.5 * f2, 0.5 * f1, z)
