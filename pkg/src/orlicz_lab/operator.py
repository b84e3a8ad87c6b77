"""Weighted degenerate elliptic operators ``-div(Q grad u) = f v`` on grids.

Radial balls and intervals use P1 elements with the coefficient sampled
at element midpoints; boxes use tensor Q1 elements with an element-wise
constant matrix ``Q``. The load is lumped onto the dual cells, so
``b_i = f_i v_i vol_i``. Boundary nodes are eliminated.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .measure import (WeightedDomain, ScalarField, _vals, _build, integrate,
                      lp_norm, sphere_area, power_weight)

__all__ = [
    "EllipticOperatorSpec",
    "DiscreteSystem",
    "SobolevReport",
    "ExpIntegrabilityReport",
    "SolverError",
    "assemble",
    "solve",
    "weak_residual",
    "energy",
    "sobolev_quotient",
    "default_family",
    "estimate_C0",
    "exp_transform",
    "exp_integral",
    "exp_budget",
    "green_origin",
]


class SolverError(RuntimeError):
    """Krylov iteration broke down or ran out of iterations."""

    def __init__(self, msg, residual=None, iterations=None):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


# -- operator description ---------------------------------------------------

def _element_midpoints(dom):
    """Centres of the primal elements (one per cell of the vertex grid)."""
    mids = [0.5 * (a[1:] + a[:-1]) for a in dom.axes]
    if dom.geometry in ("interval", "radial-ball"):
        return mids[0]
    grids = np.meshgrid(*mids, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _as_matrices(Q, count, d):
    Q = np.asarray(Q, dtype=float)
    if d == 1:
        return np.broadcast_to(Q.reshape(-1) if Q.ndim else Q, (count,)).astype(float)
    if Q.ndim == 0 or Q.shape == (count,):
        return np.broadcast_to(Q, (count,)).astype(float)[:, None, None] * np.eye(d)
    return np.broadcast_to(Q, (count, d, d)).astype(float)


def _op_norms(Q):
    if Q.ndim == 1:
        return np.abs(Q), Q
    eig = np.linalg.eigvalsh(0.5 * (Q + np.swapaxes(Q, 1, 2)))
    return np.abs(eig).max(axis=1), eig.min(axis=1)


@dataclass(eq=False)
class EllipticOperatorSpec:
    """Coefficient field ``Q`` and weight ``v`` on a :class:`WeightedDomain`.

    ``Q_nodes`` are sampled where the weight is sampled, so the bound
    ``|Q_i|_op <= k v_i`` compares like with like. ``Q_elements`` are the
    element-midpoint values used by the stiffness matrix. On one-dimensional
    geometries ``Q`` is a scalar per point, otherwise a ``d x d`` matrix.
    """

    dom: WeightedDomain
    Q_nodes: np.ndarray
    Q_elements: np.ndarray
    k_bound: float
    tag: str = "custom"
    alpha: float = None

    def __post_init__(self):
        _, low_n = _op_norms(self.Q_nodes)
        _, low_e = _op_norms(self.Q_elements)
        if np.any(low_n < -1e-12) or np.any(low_e < -1e-12):
            raise ValueError("Q must be nonnegative definite")
        if self.tag not in ("uniform", "a2-degenerate", "custom"):
            raise ValueError("unknown operator tag %r" % (self.tag,))

    @property
    def v(self):
        return self.dom.weight

    @property
    def dimension(self):
        return 1 if self.dom.geometry != "box" else self.dom.dimension

    def k_ratio(self):
        """``max |Q_i|_op / v_i`` over nodes with ``v_i > 0``."""
        norms, _ = _op_norms(self.Q_nodes)
        live = self.v > 0
        if np.any(norms[~live] > 0):
            return np.inf
        return float((norms[live] / self.v[live]).max())

    @classmethod
    def custom(cls, dom, Q, k_bound=None, tag="custom", alpha=None):
        """``Q`` is a callable of points (radii for radial balls) or a constant."""
        d = 1 if dom.geometry != "box" else dom.dimension
        mids = _element_midpoints(dom)
        if callable(Q):
            qn, qe = Q(dom.samples), Q(mids)
        else:
            qn = qe = Q
        qn = _as_matrices(qn, dom.size, d)
        qe = _as_matrices(qe, len(mids), d)
        spec = cls(dom, qn, qe, np.inf, tag, alpha)
        ratio = spec.k_ratio()
        if k_bound is None:
            k_bound = ratio
        elif ratio > k_bound * (1 + 1e-12):
            raise ValueError("|Q|_op / v reaches %g > k_bound=%g" % (ratio, k_bound))
        spec.k_bound = float(k_bound)
        return spec

    @classmethod
    def uniform(cls, dom):
        """``Q = I`` (the Laplacian); ``k`` is ``1 / min v``."""
        return cls.custom(dom, 1.0, tag="uniform")

    @classmethod
    def a2_degenerate(cls, dom, alpha):
        """``Q = |x|**alpha I`` with the domain reweighted by ``v = |x|**alpha``.

        Hypothesis holds with ``k = 1``. Nonnegative ``alpha`` keeps the
        coefficient finite at element midpoints.
        """
        if alpha < 0:
            raise ValueError("a2_degenerate needs alpha >= 0")
        w = power_weight(alpha)
        dom = _build(dom.geometry, dom.axes, w, dom.dimension, dom.radius, dom.meta)
        return cls.custom(dom, w, k_bound=1.0, tag="a2-degenerate", alpha=alpha)


# -- assembly ---------------------------------------------------------------

@dataclass(eq=False)
class DiscreteSystem:
    """Full stiffness and lumped load; ``boundary`` marks eliminated nodes."""

    spec: EllipticOperatorSpec
    stiffness: sp.csr_matrix
    load: np.ndarray
    boundary: np.ndarray
    _reduced: tuple = field(default=None, repr=False)

    @property
    def interior(self):
        return np.flatnonzero(~self.boundary)

    def reduced(self):
        if self._reduced is None:
            I = self.interior
            K = self.stiffness[I][:, I].tocsr()
            self._reduced = (K, self.load[I])
        return self._reduced


def _radial_stiffness(dom, q_el):
    r = dom.axes[0]
    h = np.diff(r)
    rm = 0.5 * (r[1:] + r[:-1])
    if dom.geometry == "radial-ball":
        c = sphere_area(dom.dimension) * q_el * rm ** (dom.dimension - 1) / h
    else:
        c = q_el / h
    n = len(r)
    main = np.zeros(n)
    main[:-1] += c
    main[1:] += c
    return sp.diags([main, -c, -c], [0, 1, -1], format="csr")


def _q1_blocks(h):
    """1-D element matrices for one axis of width ``h``."""
    D = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    G = np.array([[-0.5, -0.5], [0.5, 0.5]])    # int phi_a' phi_b
    Mm = h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    return D, G, Mm


def _box_stiffness(dom, Q_el):
    axes = dom.axes
    d = len(axes)
    hs = [np.diff(a) for a in axes]
    if any(not np.allclose(h, h[0]) for h in hs):
        raise ValueError("box assembly needs uniform spacing per axis")
    blocks = [_q1_blocks(h[0]) for h in hs]
    # G_kl = int d_k phi_i d_l phi_j over one element, i,j in local kron order
    G = np.empty((d, d, 2 ** d, 2 ** d))
    for k in range(d):
        for l in range(d):
            mat = np.ones((1, 1))
            for m in range(d):
                D, Gm, Mm = blocks[m]
                if m == k == l:
                    f = D
                elif m == k:
                    f = Gm
                elif m == l:
                    f = Gm.T
                else:
                    f = Mm
                mat = np.kron(mat, f)
            G[k, l] = mat
    Ke = np.einsum("ekl,klij->eij", Q_el, G)
    shape = tuple(len(a) for a in axes)
    cells = tuple(s - 1 for s in shape)
    corner = np.stack(np.meshgrid(*[np.arange(c) for c in cells], indexing="ij"),
                      axis=-1).reshape(-1, d)
    offs = np.array(np.meshgrid(*[[0, 1]] * d, indexing="ij")).reshape(d, -1).T
    conn = np.ravel_multi_index(tuple((corner[:, None, :] + offs[None]).transpose(2, 0, 1)),
                                shape)
    rows = np.repeat(conn, 2 ** d, axis=1).ravel()
    cols = np.tile(conn, (1, 2 ** d)).ravel()
    N = int(np.prod(shape))
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(N, N)).tocsr()
    K.sum_duplicates()
    return K


def assemble(spec, f):
    """Stiffness ``int grad psi_i . Q grad psi_j`` and load ``int f psi_i v``."""
    dom = spec.dom
    fv = _vals(f, dom)
    if not np.all(np.isfinite(fv)):
        raise ValueError("load data must be finite")
    if dom.geometry == "box":
        K = _box_stiffness(dom, spec.Q_elements)
    else:
        K = _radial_stiffness(dom, spec.Q_elements)
    K = ((K + K.T) * 0.5).tocsr() if dom.geometry == "box" else K
    load = fv * dom.mass
    return DiscreteSystem(spec, K, load, dom.boundary.copy())


# -- solving ----------------------------------------------------------------

def _pcg(K, b, rtol, maxiter):
    """Jacobi-preconditioned conjugate gradients with a fixed operation order."""
    dinv = 1.0 / K.diagonal()
    x = np.zeros_like(b)
    r = b.copy()
    bn = np.linalg.norm(b)
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for it in range(1, maxiter + 1):
        Kp = K @ p
        pKp = p @ Kp
        if not pKp > 0:
            raise SolverError("CG breakdown (p^T K p = %g)" % pKp,
                              np.linalg.norm(r) / bn, it)
        a = rz / pKp
        x += a * p
        r -= a * Kp
        res = np.linalg.norm(r) / bn
        if res <= rtol:
            return x, it, res
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError("CG did not reach rtol=%g in %d iterations (residual %.3e)"
                      % (rtol, maxiter, res), res, maxiter)


def _flux_solve(sys):
    """Exact solve for radial stiffness matrices.

    Rows sum to zero, so the flux through the interface between nodes
    ``j`` and ``j+1`` equals the load accumulated inside it. Summing
    positive increments outward-in avoids the cancellation that defeats
    LU on strongly graded grids.
    """
    K = sys.stiffness
    c = -K.diagonal(1)
    flux = np.cumsum(sys.load)[:-1]
    du = flux / c
    u = np.concatenate((np.cumsum(du[::-1])[::-1], [0.0]))
    return u[sys.interior]


def solve(sys, rtol=1e-10, method="cg", maxiter=None):
    """Solve the reduced system and return the nodal solution.

    ``method="cg"`` runs preconditioned conjugate gradients to relative
    residual ``rtol``. ``method="direct"`` uses a sparse LU factorisation,
    meant for strongly graded grids where Krylov iteration stalls; on
    radial grids it is the exact flux recurrence.
    """
    if not 0 < rtol <= 1e-4:
        raise ValueError("rtol must lie in (0, 1e-4]")
    K, b = sys.reduced()
    u = np.zeros(sys.spec.dom.size)
    if not np.any(b):
        return ScalarField(sys.spec.dom, u)
    if method == "cg":
        x, _, _ = _pcg(K, b, rtol, maxiter or 20 * len(b) + 100)
    elif method == "direct" and sys.spec.dom.geometry == "radial-ball":
        x = _flux_solve(sys)
    elif method == "direct":
        x = spsolve(K.tocsc(), b)
        res = np.linalg.norm(K @ x - b) / np.linalg.norm(b)
        if not np.all(np.isfinite(x)) or res > max(rtol, 1e-8):
            raise SolverError("direct solve residual %.3e" % res, res, 1)
    else:
        raise ValueError("unknown method %r" % (method,))
    u[sys.interior] = x
    return ScalarField(sys.spec.dom, u)


def energy(spec, psi, K=None):
    """``int |sqrt(Q) grad psi|^2`` for the discrete field ``psi``."""
    if K is None:
        K = assemble(spec, 0.0).stiffness
    x = _vals(psi, spec.dom)
    return float(x @ (K @ x))


def weak_residual(spec, u, f, tests=None, sys=None):
    """Largest signed gap ``a(u, psi) - int f psi v`` over test functions.

    ``tests`` defaults to the interior hat functions, for which the gap
    is the nodal residual of the discrete equation. Other tests are given
    as fields or arrays that vanish on the boundary.
    """
    sys = sys or assemble(spec, f)
    r = sys.stiffness @ _vals(u, spec.dom) - sys.load
    if tests is None:
        return float(r[sys.interior].max())
    gaps = []
    for psi in tests:
        x = _vals(psi, spec.dom)
        if np.any(x[sys.boundary] != 0):
            raise ValueError("test functions must vanish on the boundary")
        gaps.append(float(x @ r))
    return max(gaps)


# -- Sobolev quotient -------------------------------------------------------

@dataclass
class SobolevReport:
    sigma: float
    C0_lower: float
    argmax: str
    quotients: dict

    def __post_init__(self):
        if not self.C0_lower > 0:
            raise ValueError("Sobolev lower bound must be positive")


def sobolev_quotient(spec, psi, sigma, K=None):
    """``||psi||_{2 sigma; v} / ||sqrt(Q) grad psi||_2``."""
    if sigma <= 1:
        raise ValueError("sigma must exceed 1")
    x = _vals(psi, spec.dom)
    if np.any(np.abs(x[spec.dom.boundary]) > 0):
        raise ValueError("psi must vanish on the boundary")
    e = energy(spec, x, K)
    if not e > 0:
        raise ValueError("psi has zero energy")
    return lp_norm(x, 2 * sigma, spec.dom) / np.sqrt(e)


def default_family(dom):
    """Named test functions vanishing on the boundary.

    Tents and truncated powers for every geometry; on balls also
    truncated bubbles ``(1 + r^2/s^2)^{-(n-2)/2}`` minus their boundary
    value, which approach the extremals of the classical inequality.
    """
    fam = {}
    if dom.geometry == "radial-ball":
        R = dom.radius
        r = dom.nodes
        n = dom.dimension
        for frac in (1.0, 0.5, 0.25, 0.1):
            fam["tent(%g)" % frac] = np.clip(1 - r / (frac * R), 0, None)
        for a in (0.5, 1.0, 2.0, 4.0):
            fam["pow(%g)" % a] = (R ** a - r ** a) / R ** a
        h = R / max(dom.meta.get("cells", len(r)), 1)
        if n > 2:
            for s in (0.5, 0.2, 0.1, 0.05, 0.02):
                if s < 4 * h:
                    continue
                b = lambda t: (1 + (t / s) ** 2) ** (-(n - 2) / 2)
                fam["bubble(%g)" % s] = np.clip(b(r) - b(R), 0, None)
    else:
        axes = dom.axes
        pts = dom.nodes.reshape(dom.size, -1)
        lo = np.array([a[0] for a in axes])
        hi = np.array([a[-1] for a in axes])
        c = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        t = (pts - c) / half
        for frac in (1.0, 0.5, 0.25):
            fam["tent(%g)" % frac] = np.prod(np.clip(1 - np.abs(t) / frac, 0, None), axis=1)
        for a in (1.0, 2.0, 4.0):
            fam["pow(%g)" % a] = np.prod(1 - np.abs(t) ** a, axis=1)
        fam["sine"] = np.prod(np.cos(0.5 * np.pi * t), axis=1)
    out = {}
    for k, v in fam.items():
        v = np.array(v, dtype=float)
        v[dom.boundary] = 0.0
        if np.any(v):
            out[k] = v
    return out


def estimate_C0(spec, sigma, family=None):
    """Lower bound for the Sobolev constant: the best quotient over ``family``."""
    fam = default_family(spec.dom) if family is None else dict(family)
    if not fam:
        raise ValueError("empty test family")
    K = assemble(spec, 0.0).stiffness
    qs = {k: sobolev_quotient(spec, v, sigma, K) for k, v in fam.items()}
    best = max(qs, key=qs.get)
    return SobolevReport(float(sigma), qs[best], best, qs)


# -- exponential transforms -------------------------------------------------

def _check_exp(u, alpha, dom):
    x = _vals(u, dom)
    if alpha <= 0:
        raise ValueError("exponent must be positive")
    if np.any(x < -1e-10):
        raise ValueError("u must be nonnegative")
    x = np.maximum(x, 0.0)
    if alpha * x.max() > 700:
        raise OverflowError("alpha * max(u) = %g exceeds 700" % (alpha * x.max()))
    return x


def exp_transform(u, alpha, dom=None):
    """``w = exp(alpha u) - 1``."""
    dom = dom or u.domain
    return ScalarField(dom, np.expm1(alpha * _check_exp(u, alpha, dom)))


@dataclass
class ExpIntegrabilityReport:
    gamma: float
    integral: float
    M_budget: float
    applicable: bool
    total_mass: float

    @property
    def within_budget(self):
        return self.applicable and self.integral <= self.M_budget

    @property
    def above_floor(self):
        return self.integral >= self.total_mass * (1 - 1e-14)


def exp_budget(gamma, C0, total_mass):
    """``(1 + X)^2 v(Omega)`` with ``X = C0^2 gamma / (2 (1 - C0^2 gamma / 4))``.

    Returns ``inf`` outside ``0 < gamma < 4 / C0^2``.
    """
    g = C0 * C0 * gamma
    if not 0 < g < 4:
        return np.inf
    X = g / (2 * (1 - g / 4))
    return (1 + X) ** 2 * total_mass


def exp_integral(u, gamma, dom, C0=None):
    dom = dom or u.domain
    x = _check_exp(u, gamma, dom)
    val = integrate(np.exp(gamma * x), dom)
    if C0 is None:
        return ExpIntegrabilityReport(gamma, val, np.inf, False, dom.total_mass)
    M = exp_budget(gamma, C0, dom.total_mass)
    return ExpIntegrabilityReport(gamma, val, M, bool(np.isfinite(M)), dom.total_mass)


# -- Green representation at the centre of a ball ---------------------------

def green_origin(f, n, edges=None, radius=1.0):
    """``u(0)`` for ``-Lap u = f`` on ``B(0, radius)`` with zero boundary values.

    ``f`` is a callable of the radius; the Dirichlet kernel reduces to
    ``(1/(n-2)) int_0^R (r - r^{n-1}/R^{n-2}) f(r) dr``, integrated with
    Simpson's rule on ``edges`` (a refined geometric grid by default).
    """
    from scipy.integrate import simpson
    if n < 3:
        raise ValueError("needs n >= 3")
    if edges is None:
        edges = np.concatenate(([0.0], np.geomspace(1e-12 * radius, radius, 4001)))
    r = np.asarray(edges, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        g = (r - r ** (n - 1) / radius ** (n - 2)) * np.asarray(f(r), dtype=float)
    g = np.where(r > 0, g, 0.0)
    return float(simpson(g, x=r) / (n - 2))
