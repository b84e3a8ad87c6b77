"""Power-log Young functions ``A(t) = t**p * log(e + t)**q`` and their conjugates.

All functions accept scalars or arrays and are pure.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._roots import RTOL, MAXITER, RootFindingError, bisect_increasing, expand_bracket

__all__ = [
    "YoungParams",
    "ConjugateForm",
    "PreceqReport",
    "conjugate_exponent",
    "evaluate",
    "derivative",
    "inverse",
    "conjugate_eval",
    "conjugate_inverse",
    "conjugate_closed",
    "conjugate_inverse_closed",
    "preceq_check",
]

E = np.e


def conjugate_exponent(p):
    """Hölder conjugate ``p' = p / (p - 1)``."""
    if p <= 1:
        raise ValueError("conjugate exponent needs p > 1, got %r" % (p,))
    return p / (p - 1.0)


def _nonneg(t, name="t"):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(np.isnan(t)):
        raise ValueError("%s must be nonnegative" % name)
    return t


def _out(x, like):
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class YoungParams:
    """Exponents of ``A(t) = t**p * log(e + t)**q``.

    ``p > 1`` is required for conjugation. ``p = 1`` is admitted so that
    ``L^1``-type gauges can be formed, and ``q = 0`` gives the pure power.
    """

    p: float
    q: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.p) or self.p < 1:
            raise ValueError("Young exponent p must be >= 1, got %r" % (self.p,))
        if not np.isfinite(self.q) or self.q < 0:
            raise ValueError("log exponent q must be >= 0, got %r" % (self.q,))

    @property
    def p_conj(self):
        return conjugate_exponent(self.p)

    def __call__(self, t):
        return evaluate(self, t)

    def inverse(self, y):
        return inverse(self, y)

    def derivative(self, s):
        return derivative(self, s)

    def conjugate(self):
        return ConjugateForm(self, "numeric-legendre")

    def log_eval(self, t):
        """``log A(t)`` without overflow, for ``t > 0``."""
        lt = np.log(t)
        return self.p * lt + self.q * np.log(np.logaddexp(1.0, lt))


def evaluate(params, t):
    t = _nonneg(t)
    with np.errstate(over="ignore"):
        out = t ** params.p * np.log(E + t) ** params.q
    return _out(out, t)


def derivative(params, s):
    """``A'(s)``; increasing in ``s`` for ``p > 1``."""
    s = _nonneg(s, "s")
    p, q = params.p, params.q
    L = np.log(E + s)
    with np.errstate(over="ignore", invalid="ignore"):
        out = p * s ** (p - 1) * L ** q
        if q:
            out = out + q * s ** p * L ** (q - 1) / (E + s)
    return _out(out, s)


def inverse(params, y, rtol=RTOL, maxiter=MAXITER):
    """``A^{-1}(y)`` by bisection on the bracket implied by ``log(e+t) >= 1``."""
    y = _nonneg(y, "y")
    p, q = params.p, params.q
    yy = np.atleast_1d(y).astype(float)
    out = np.zeros_like(yy)
    pos = yy > 0
    if np.any(pos):
        target = yy[pos]
        hi = target ** (1.0 / p)
        lo = (target / np.log(E + hi) ** q) ** (1.0 / p)
        if q == 0:
            out[pos] = hi
        else:
            root, _ = bisect_increasing(lambda t: evaluate(params, t),
                                        target, lo, hi, rtol, maxiter)
            out[pos] = root
    return _out(out.reshape(np.shape(y)), y)


def _log_dA(params, x):
    """``log A'(e**x)`` and its derivative in ``x``, both overflow-free."""
    p, q = params.p, params.q
    s = np.exp(x)
    L = np.logaddexp(1.0, x)  # log(e + s)
    su = s / (E + s)
    core = p * L + q * su
    val = (p - 1) * x + (q - 1) * np.log(L) + np.log(core)
    num = (p * (p - 1) * L * L + 2 * p * q * su * L
           + q * (q - 1) * su * su - q * su * su * L)
    return val, num / (L * core)


def _argmax_s(params, t, rtol, maxiter):
    """Maximiser ``s*`` of ``s t - A(s)``, i.e. the root of ``A'(s) = t``.

    Newton on ``log A'(e**x) = log t`` kept inside a shrinking bracket;
    a step that leaves the bracket is replaced by bisection.
    """
    p, q = params.p, params.q
    if p <= 1:
        raise ValueError("conjugation needs p > 1")
    hi = (t / p) ** (1.0 / (p - 1))
    if q == 0:
        return hi
    lo = (t / ((p + q) * np.log(E + hi) ** q)) ** (1.0 / (p - 1))
    xl, xh = np.log(lo), np.log(hi)
    lt = np.log(t)
    x = 0.5 * (xl + xh)
    step_old = xh - xl
    for _ in range(maxiter):
        F, dF = _log_dA(params, x)
        F = F - lt
        xl = np.where(F < 0, x, xl)
        xh = np.where(F < 0, xh, x)
        xn = x - F / dF
        # bisect when Newton leaves the bracket or fails to halve the step
        slow = np.abs(xn - x) > 0.5 * np.abs(step_old)
        out = ~((xn > xl) & (xn < xh)) | slow
        xn = np.where(out, 0.5 * (xl + xh), xn)
        step_old = xn - x
        done = np.abs(step_old) <= rtol
        x = xn
        if np.all(done):
            return np.exp(x)
    raise RootFindingError("stationary point did not converge")


def conjugate_eval(params, t, rtol=RTOL, maxiter=MAXITER):
    """Numeric Legendre transform ``sup_{s>0} (s t - A(s))``.

    The supremum is attained at the stationary point ``A'(s) = t``, which
    is located by bisection; the objective is flat there, so the value is
    accurate to second order in the root tolerance.
    """
    t = _nonneg(t)
    tt = np.atleast_1d(t).astype(float)
    out = np.zeros_like(tt)
    pos = tt > 0
    if np.any(pos):
        tp = tt[pos]
        s = _argmax_s(params, tp, rtol, maxiter)
        out[pos] = np.maximum(s * tp - evaluate(params, s), 0.0)
    return _out(out.reshape(np.shape(t)), t)


def conjugate_inverse(params, y, rtol=RTOL, maxiter=MAXITER):
    """Numerical inverse of :func:`conjugate_eval` (scalar ``y >= 0``)."""
    y = float(_nonneg(y, "y"))
    if y == 0:
        return 0.0
    return _invert_scalar(lambda t: conjugate_eval(params, t, rtol, maxiter), y,
                          max(conjugate_inverse_closed(params, y), 1e-300), rtol)


def _invert_scalar(fun, y, guess, rtol=RTOL):
    """Invert an increasing scalar ``fun`` at ``y`` starting near ``guess``.

    The bracket is grown geometrically, then Brent's method runs on
    ``log fun(e**x) = log y``.
    """
    lo, hi = expand_bracket(fun, y, guess / 2, guess * 2)
    ly = np.log(y)

    def g(x):
        v = fun(np.exp(x))
        return (np.log(v) if v > 0 else -745.0) - ly

    if g(np.log(lo)) == 0:
        return float(lo)
    if g(np.log(hi)) == 0:
        return float(hi)
    x = brentq(g, np.log(lo), np.log(hi), xtol=1e-300, rtol=rtol / 4, maxiter=MAXITER)
    return float(np.exp(x))


def conjugate_closed(params, t):
    """Closed-form equivalent ``t**p' / log(e + t)**(q (p' - 1))`` of the conjugate."""
    t = _nonneg(t)
    pc = params.p_conj
    out = t ** pc / np.log(E + t) ** (params.q * (pc - 1))
    return _out(out, t)


def conjugate_inverse_closed(params, y):
    """Closed-form equivalent ``y**(1/p') * log(e + y)**(q/p)`` of the inverse conjugate."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("y must be positive")
    pc = params.p_conj
    out = y ** (1.0 / pc) * np.log(E + y) ** (params.q / params.p)
    return _out(out, y)


@dataclass(frozen=True)
class ConjugateForm:
    """The conjugate of a power-log Young function.

    ``kind`` selects the numeric Legendre transform (a genuine Young
    function, used for every norm computation) or the closed-form
    equivalent (same growth, only comparable up to constants).
    """

    params: YoungParams
    kind: str = "numeric-legendre"

    def __post_init__(self):
        if self.kind not in ("numeric-legendre", "closed-form"):
            raise ValueError("unknown conjugate kind %r" % (self.kind,))
        conjugate_exponent(self.params.p)

    @property
    def exponents(self):
        pc = self.params.p_conj
        return pc, self.params.q * (pc - 1)

    def __call__(self, t):
        if self.kind == "closed-form":
            return conjugate_closed(self.params, t)
        return conjugate_eval(self.params, t)

    def inverse(self, y):
        if self.kind == "closed-form":
            y = float(y)
            if y == 0:
                return 0.0
            return _invert_scalar(lambda t: conjugate_closed(self.params, t), y,
                                  conjugate_inverse_closed(self.params, y))
        return conjugate_inverse(self.params, y)


@dataclass
class PreceqReport:
    holds: bool
    c: float = None
    t0: float = None


def preceq_check(A, B, t_grid):
    """Search for ``c = 2**j`` (``j <= 40``) and ``t0`` in ``t_grid`` with
    ``A(t) <= B(c t)`` at every grid point ``t >= t0``.

    Comparisons are made on logarithms so grids may extend far beyond the
    float range of ``A`` itself. Returns the first witness in order of
    increasing ``c`` then increasing ``t0``.
    """
    t = np.sort(np.asarray(t_grid, dtype=float))
    if t.size == 0 or t[0] <= 0:
        raise ValueError("t_grid must be nonempty and positive")
    logA = A.log_eval(t)
    for j in range(41):
        c = 2.0 ** j
        ok = logA <= B.log_eval(c * t) + 1e-12
        # suffix-all: ok[i:] all true
        tail = np.logical_and.accumulate(ok[::-1])[::-1]
        if tail.any():
            return PreceqReport(True, c, float(t[np.argmax(tail)]))
    return PreceqReport(False)
