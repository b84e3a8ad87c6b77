"""Bracketed root finding shared by the Young-function and norm code."""

import numpy as np

RTOL = 1e-12
MAXITER = 200


class RootFindingError(RuntimeError):
    pass


def bisect_increasing(fun, target, lo, hi, rtol=RTOL, maxiter=MAXITER):
    """Solve ``fun(x) = target`` for an increasing ``fun`` by bisection.

    Works elementwise on arrays. ``lo`` and ``hi`` must bracket the root
    (``fun(lo) <= target <= fun(hi)``). Midpoints are geometric wherever
    ``lo > 0`` so the iteration count does not depend on the magnitude
    of the root.

    Returns
    -------
    root : ndarray
    iterations : int
    """
    target = np.asarray(target, dtype=float)
    lo, hi = np.broadcast_arrays(np.asarray(lo, dtype=float),
                                 np.asarray(hi, dtype=float))
    lo = lo.copy()
    hi = hi.copy()
    for it in range(1, maxiter + 1):
        pos = lo > 0
        mid = np.where(pos, np.sqrt(np.where(pos, lo, 1.0) * hi), 0.5 * (lo + hi))
        below = fun(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= rtol * hi):
            return 0.5 * (lo + hi), it
    raise RootFindingError(
        "bisection did not reach rtol=%g in %d iterations" % (rtol, maxiter))


def expand_bracket(fun, target, lo, hi, factor=2.0, maxiter=2000):
    """Grow ``[lo, hi]`` geometrically until it brackets ``fun = target``.

    Scalar only; ``fun`` increasing and ``lo > 0``.
    """
    for _ in range(maxiter):
        if fun(hi) >= target:
            break
        lo, hi = hi, hi * factor
    else:
        raise RootFindingError("could not bracket from above")
    for _ in range(maxiter):
        if fun(lo) <= target:
            break
        hi, lo = lo, lo / factor
    else:
        raise RootFindingError("could not bracket from below")
    return lo, hi
