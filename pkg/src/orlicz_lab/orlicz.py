"""Luxemburg norms on weighted domains and the inequalities built on them."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._roots import expand_bracket
from .measure import _vals, lp_norm
from .young import YoungParams

__all__ = [
    "NormReport",
    "HolderReport",
    "ChainReport",
    "modular",
    "luxemburg_norm",
    "holder_pairing",
    "indicator_norm",
    "indicator_bound_constants",
    "norm_chain_check",
]

NORM_RTOL = 1e-13


@dataclass
class NormReport:
    value: float
    modular_at_value: float
    iterations: int

    def __float__(self):
        return self.value


def modular(f, young, lam, dom):
    """``int young(|f| / lam) v dx``."""
    g = np.abs(_vals(f, dom))
    mass = dom.mass
    live = (g > 0) & (mass > 0)
    with np.errstate(over="ignore"):
        return float(np.dot(young(g[live] / lam), mass[live]))


def luxemburg_norm(f, young, dom):
    """Luxemburg gauge ``inf{lam > 0 : int young(|f|/lam) v dx <= 1}``.

    ``young`` is any increasing convex callable with an ``inverse`` method
    (a :class:`YoungParams` or a :class:`ConjugateForm`). ``f`` is first
    scaled by its sup so that ``||c f||`` is exactly ``|c| ||f||`` up to
    one rounding.
    """
    g = np.abs(_vals(f, dom))
    live = (g > 0) & (dom.mass > 0)
    if not live.any():
        return NormReport(0.0, 0.0, 0)
    top = g[live].max()
    h = g[live] / top
    mass = dom.mass[live]

    def mod(lam):
        with np.errstate(over="ignore"):
            return float(np.dot(young(h / lam), mass))

    # modular(lam_hi) <= young(1/lam_hi) v(Omega) <= 1
    vtot = float(mass.sum())
    hi = max(1.0, 1.0 / young.inverse(1.0 / vtot))
    lo = hi * 2.0 ** -60
    lo, hi = expand_bracket(lambda lam: -mod(lam), -1.0, lo, hi)
    lam, its = _bisect_lam(mod, lo, hi)
    return NormReport(float(top * lam), mod(lam), its)


def _bisect_lam(mod, lo, hi, rtol=NORM_RTOL):
    """Solve ``mod(lam) = 1`` by Brent's method in ``log lam`` and return
    the nearest ``lam`` on the ``mod <= 1`` side, with the evaluation count."""
    calls = [0]

    def phi(x):
        calls[0] += 1
        m = mod(np.exp(x))
        return np.log(m) if m < 1e300 else 700.0

    x = brentq(phi, np.log(lo), np.log(hi), xtol=1e-300, rtol=rtol / 4)
    lam = np.exp(x)
    while mod(lam) > 1.0:
        lam = np.nextafter(lam, np.inf)
        calls[0] += 1
    return lam, calls[0]


@dataclass
class HolderReport:
    lhs: float
    rhs: float
    holds: bool
    norm_f: float = None
    norm_g: float = None


def holder_pairing(f, g, young, dom, slack=1e-9):
    """Check ``int |f g| v dx <= 2 ||f||_A ||g||_{conj A}``."""
    fv, gv = _vals(f, dom), _vals(g, dom)
    lhs = float(np.dot(np.abs(fv * gv), dom.mass))
    nf = luxemburg_norm(fv, young, dom).value
    ng = luxemburg_norm(gv, young.conjugate(), dom).value
    rhs = 2.0 * nf * ng
    return HolderReport(lhs, rhs, lhs <= rhs * (1 + slack), nf, ng)


def indicator_norm(young, mass):
    """Norm of an indicator of weighted measure ``mass`` in the conjugate space.

    Equals ``1 / conj^{-1}(1 / mass)`` with the conjugate inverted
    numerically.
    """
    if not mass > 0:
        raise ValueError("indicator_norm needs positive mass, got %r" % (mass,))
    conj = young.conjugate() if isinstance(young, YoungParams) else young
    return 1.0 / conj.inverse(1.0 / mass)


def indicator_bound_constants(young, masses):
    """Ratios of :func:`indicator_norm` to the two displayed majorants.

    Returns ``(ratio_log1p, ratio_loge)`` arrays for
    ``mass**(1/p') / log(1 + 1/mass)**(q/p)`` and the same with
    ``log(e + 1/mass)``. Bounded ratios over small masses certify the
    majorant up to a constant.
    """
    masses = np.asarray(masses, dtype=float)
    p, q = young.p, young.q
    pc = young.p_conj
    m0 = np.array([indicator_norm(young, m) for m in masses])
    base = masses ** (1.0 / pc)
    r1 = m0 / (base / np.log1p(1.0 / masses) ** (q / p))
    r2 = m0 / (base / np.log(np.e + 1.0 / masses) ** (q / p))
    return r1, r2


@dataclass
class ChainReport:
    norms: tuple          # (||f||_p1, ||f||_A, ||f||_p2, ||f||_B)
    constants: tuple      # minimal c with left <= c * right, per link
    ordered: tuple        # each link holds with c <= bound

    @property
    def max_constant(self):
        return max(self.constants)


def norm_chain_check(f, p1, q1, p2, q2, dom, bound=10.0):
    """Measure the constants in ``||f||_p1 <~ ||f||_A <~ ||f||_p2 <~ ||f||_B``
    with ``A = (p1, q1)`` and ``B = (p2, q2)`` power-log functions."""
    if not (1 <= p1 <= p2 and 0 <= q1 <= q2):
        raise ValueError("need 1 <= p1 <= p2 and 0 <= q1 <= q2")
    A, B = YoungParams(p1, q1), YoungParams(p2, q2)
    norms = (lp_norm(f, p1, dom), luxemburg_norm(f, A, dom).value,
             lp_norm(f, p2, dom), luxemburg_norm(f, B, dom).value)
    consts = []
    for left, right in zip(norms[:-1], norms[1:]):
        consts.append(left / right if right > 0 else (0.0 if left == 0 else np.inf))
    return ChainReport(norms, tuple(consts), tuple(c <= bound for c in consts))
