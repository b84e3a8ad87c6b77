"""Level-set iteration bookkeeping for L-infinity bounds.

Levels ``C_k`` climb to ``r0``, ``mu_k`` is the weighted measure of
``{u > C_k}`` and ``m_k = log(1/mu_k)``. The helpers below build that
ledger from a discrete solution, choose the threshold multiplier
``tau0``, replay the induction ``m_k >= m_0 + k`` as plain arithmetic,
and solve for the exponent triple used in the sharpened bound.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .measure import _vals, level_set_measure, lp_norm
from .orlicz import luxemburg_norm
from .young import YoungParams

__all__ = [
    "IterationParams",
    "DeGiorgiLedger",
    "InductionReport",
    "ConstantReport",
    "ExponentTriple",
    "levels",
    "build_ledger",
    "tau0_threshold",
    "induction_verify",
    "empirical_constant",
    "exponent_triple",
]


def _conj(x):
    return x / (x - 1.0)


@dataclass(frozen=True)
class IterationParams:
    """``epsilon`` is derived as ``q / sigma' - 1`` and must be positive.

    ``r0 = tau0 * ||f||_A`` once a norm is supplied.
    """

    sigma: float
    q: float
    C: float = 1.0
    tau0: float = None
    norm_f: float = None

    def __post_init__(self):
        if not self.sigma > 1:
            raise ValueError("sigma must exceed 1")
        if not self.q > self.sigma_conj:
            raise ValueError("need q > sigma' = %g, got q=%g" % (self.sigma_conj, self.q))
        if not self.C > 0:
            raise ValueError("C must be positive")
        if self.tau0 is None:
            object.__setattr__(self, "tau0", tau0_threshold(self.C, self.epsilon))

    @property
    def sigma_conj(self):
        return _conj(self.sigma)

    @property
    def epsilon(self):
        return self.q / self.sigma_conj - 1.0

    @property
    def r0(self):
        if self.norm_f is None:
            raise ValueError("r0 needs norm_f")
        return self.tau0 * self.norm_f


def levels(r0, epsilon, K):
    """``C_k = r0 (1 - (k+1)^-eps)`` for ``1 <= k <= K`` and ``C_0 = C_1 / 2``."""
    if not (r0 > 0 and epsilon > 0):
        raise ValueError("r0 and epsilon must be positive")
    k = np.arange(K + 1, dtype=float)
    C = r0 * -np.expm1(-epsilon * np.log1p(k))
    if K >= 1:
        C[0] = C[1] / 2
    else:
        C[0] = r0 * -np.expm1(-epsilon * np.log(2.0)) / 2
    return C


@dataclass
class DeGiorgiLedger:
    k: np.ndarray
    C: np.ndarray
    mu: np.ndarray
    m: np.ndarray
    r0: float
    params: IterationParams
    source: str = ""

    @property
    def truncated(self):
        """True when some level was reached with zero measure."""
        return bool(np.isinf(self.m[-1])) if len(self.m) else False

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "C_k", "mu_k", "m_k"])
        for row in zip(self.k, self.C, self.mu, self.m):
            w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def build_ledger(u, params, dom, K, r0=None, source=""):
    """Rows ``(k, C_k, mu_k, m_k)`` for ``k <= K``, stopping at the first
    level whose superlevel set has zero measure (its ``m_k`` is ``inf``)."""
    x = _vals(u, dom)
    if np.any(x < -1e-10):
        raise ValueError("u must be nonnegative")
    r0 = params.r0 if r0 is None else r0
    C = levels(r0, params.epsilon, K)
    rows = []
    for k in range(K + 1):
        mu = level_set_measure(x, C[k], dom)
        m = np.inf if mu == 0 else -np.log(mu)
        rows.append((k, C[k], mu, m))
        if mu == 0:
            break
    k, C, mu, m = (np.array(c) for c in zip(*rows))
    return DeGiorgiLedger(k.astype(int), C, mu, m, float(r0), params, source)


def tau0_threshold(C, epsilon):
    """``max(2^(eps+1) e C / (2^eps - 1), e C / eps)``."""
    if not (C > 0 and epsilon > 0):
        raise ValueError("C and epsilon must be positive")
    first = 2.0 ** (epsilon + 1) * np.e * C / np.expm1(epsilon * np.log(2.0))
    return float(max(first, np.e * C / epsilon))


@dataclass
class InductionReport:
    holds: bool
    first_failure: int = None
    m_last: float = None
    steps: int = 0


def induction_verify(m0, K, sigma, q, epsilon, tau0, C):
    """Iterate the lower bound
    ``m_{k+1} = 2 sigma log(eps tau0 / C) + (2 sigma q / sigma') log(m_k / (k+2)) + m_k``
    from ``m0`` and check ``m_k >= m0 + k`` for ``k <= K``.
    """
    if m0 < 2:
        raise ValueError("the induction starts from m0 >= 2")
    sc = _conj(sigma)
    if not q > sc or not epsilon > 0:
        raise ValueError("need q > sigma' and epsilon > 0")
    a = 2 * sigma * math.log(epsilon * tau0 / C)
    b = 2 * sigma * q / sc
    m = float(m0)
    log = math.log
    for k in range(K):
        if m <= 0:
            return InductionReport(False, k, m, k)
        m = a + b * log(m / (k + 2)) + m
        if not m >= m0 + k + 1:
            return InductionReport(False, k + 1, m, k + 1)
    return InductionReport(True, None, m, K)


@dataclass
class ConstantReport:
    C: float
    pairs: int
    left_ok: bool
    left_violations: int
    table: list = field(default_factory=list, repr=False)


def empirical_constant(u, f, A, sigma, dom, r_grid):
    """Smallest ``C`` making the level-set iteration inequality hold on ``r_grid``.

    For every pair ``r < s`` with ``mu(r) > 0``:
    ``C(r, s) = v(S(s))^(1/2sigma) (s-r) log(e + 1/mu(r))^(q/sigma')
    / (||f||_A mu(r)^(1/2sigma))``. The left inequality
    ``v(S(s))^(1/2sigma) (s-r) <= ||(u-r)_+ 1_{S(s)}||_{2 sigma}`` is
    checked on the same pairs.
    """
    x = _vals(u, dom)
    if not isinstance(A, YoungParams):
        A = YoungParams(*A)
    q = A.q
    sc = _conj(sigma)
    nf = luxemburg_norm(f, A, dom).value
    if not nf > 0:
        raise ValueError("f has zero norm")
    r = np.sort(np.asarray(r_grid, dtype=float))
    mus = np.array([level_set_measure(x, t, dom) for t in r])
    best, count, bad, table = 0.0, 0, 0, []
    for i in range(len(r)):
        if mus[i] == 0:
            continue
        for j in range(i + 1, len(r)):
            s = r[j]
            left = mus[j] ** (1 / (2 * sigma)) * (s - r[i])
            phi = np.where(x > s, x - r[i], 0.0)
            mid = lp_norm(phi, 2 * sigma, dom)
            if left > mid * (1 + 1e-12):
                bad += 1
            c = left * np.log(np.e + 1 / mus[i]) ** (q / sc) / (nf * mus[i] ** (1 / (2 * sigma)))
            table.append((r[i], s, c))
            best = max(best, c)
            count += 1
    return ConstantReport(float(best), count, bad == 0, bad, table)


@dataclass(frozen=True)
class ExponentTriple:
    sigma: float
    beta: float
    b: float
    b_bar: float
    p: float
    Gamma: float

    @property
    def holder_sum(self):
        return 1 / self.b + 1 / self.b_bar + 1 / self.p


def exponent_triple(sigma, theta=0.5, beta=None):
    """Exponents ``b = 2 sigma (1 - beta)``, ``b_bar = (1 + beta)(2 sigma)'``
    and ``p`` with ``1/b + 1/b_bar + 1/p = 1``.

    ``beta`` defaults to ``theta`` times the binding constraint
    ``min(1/2, (sigma' - (2sigma)')/(2sigma)', 1/sigma')``.
    """
    if not sigma > 1:
        raise ValueError("sigma must exceed 1")
    sc, tc = _conj(sigma), _conj(2 * sigma)
    if beta is None:
        if not 0 < theta < 1:
            raise ValueError("theta must lie in (0, 1)")
        beta = theta * min(0.5, (sc - tc) / tc, 1 / sc)
    b = 2 * sigma * (1 - beta)
    bb = (1 + beta) * tc
    # 1 - 1/b - 1/b_bar in factored form, free of cancellation for small beta
    inv_p = beta / (1 + beta) * ((sigma - 1) - sigma * beta) / (sigma * (1 - beta))
    if not 0 < inv_p < 1:
        raise ValueError("beta=%g leaves no room for p" % beta)
    p = 1 / inv_p
    G = (2 * sigma / bb) * ((sc - bb) / sc + (2 * sigma - b) / (2 * sigma))
    return ExponentTriple(float(sigma), float(beta), b, bb, p, G)
