"""Closed convex sets in V-representation and H-representation polytopes.

A ``ConvexSet`` is a polytope-plus-cone: the Minkowski sum of the convex hull
of finitely many vertices and the cone generated by finitely many directions.
This class is closed under every operation the testbed needs (values of the
operator catalog, Minkowski sums, exposed faces, normal cones), and it admits
exact support functions.  The empty set is the sentinel with zero vertices;
its support function is -inf in every direction.

``PolytopeH`` is a finite intersection of halfspaces ``<normal, y> <= offset``
used for operator domains.

Everything here targets desk-scale instances (dimension at most 4, a handful
of vertices); canonicalization and membership run small linear programs
through scipy's HiGHS backend, with analytic fast paths in dimension 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect, brentq, linprog, minimize

from .errors import (
    DimensionMismatchError,
    FaceUndefinedError,
    InputError,
    SolverFailError,
)
from .geometry import NormedSpace

__all__ = [
    "ConvexSet",
    "PolytopeH",
    "MinNormResult",
    "SetDistanceReport",
    "support_function",
    "face",
    "normal_cone",
    "minkowski_sum",
    "convex_hull",
    "min_norm_point",
    "set_distance_report",
    "contains_point",
    "linf_distance",
    "facet_normals",
    "direction_grid",
]

# Single active-set knob: vertices and rows count as active within this.
GEOM_TOL = 1e-9
# Cone positivity threshold for +inf support detection.
RAY_TOL = 1e-12
# Required KKT / duality-gap residual for the min-norm solver.
MIN_NORM_RESIDUAL = 1e-8

_LP_METHOD = "highs"


def _rows(arr, n, name):
    a = np.asarray(arr, dtype=float)
    if a.size == 0:
        return np.zeros((0, n))
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2 or a.shape[1] != n:
        raise DimensionMismatchError(f"{name}: expected rows of length {n}, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name}: entries must be finite")
    return a


def _dedupe_rows(rows, tol):
    kept = []
    for r in rows:
        if not any(np.max(np.abs(r - k)) <= tol for k in kept):
            kept.append(r)
    return np.asarray(kept) if kept else rows[:0]


def _lexsorted(rows):
    if len(rows) <= 1:
        return rows
    order = np.lexsort(rows.T[::-1])
    return rows[order]


# ----------------------------------------------------------------------
# ConvexSet
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexSet:
    """Convex hull of ``vertices`` plus the cone spanned by ``generators``.

    Instances are immutable.  ``vertices`` is a (k, n) array with k = 0 only
    for the empty sentinel; ``generators`` is an (m, n) array of recession
    directions, normalized to unit Euclidean length.  Use the module factory
    functions or :meth:`make` to construct canonicalized instances.
    """

    vertices: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        g = np.asarray(self.generators, dtype=float)
        if v.ndim != 2:
            raise InputError("vertices must be a 2-d array")
        if g.ndim != 2 or g.shape[1] != v.shape[1]:
            raise DimensionMismatchError("generators must match vertex dimension")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(g))):
            raise InputError("ConvexSet entries must be finite")
        v.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "generators", g)

    # -- constructors ----------------------------------------------------

    @staticmethod
    def make(vertices, generators=None, n=None):
        """Canonicalized set from raw vertex and generator arrays."""
        if n is None:
            probe = np.asarray(vertices, dtype=float)
            if probe.size == 0 and generators is not None:
                probe = np.asarray(generators, dtype=float)
            if probe.size == 0:
                raise InputError("cannot infer dimension from empty data; pass n")
            n = probe.reshape(-1, probe.shape[-1]).shape[1] if probe.ndim > 1 else probe.shape[0]
        v = _rows(vertices, n, "vertices")
        g = _rows(generators if generators is not None else [], n, "generators")
        if v.shape[0] == 0:
            raise InputError("a nonempty ConvexSet needs at least one vertex")
        v, g = _canonicalize(v, g)
        return ConvexSet(v, g)

    @staticmethod
    def singleton(point):
        point = np.asarray(point, dtype=float).reshape(-1)
        return ConvexSet.make(point.reshape(1, -1))

    @staticmethod
    def empty(n):
        """The empty sentinel in dimension n."""
        return ConvexSet(np.zeros((0, n)), np.zeros((0, n)))

    # -- basic queries ---------------------------------------------------

    @property
    def n(self):
        return self.vertices.shape[1]

    @property
    def is_empty(self):
        return self.vertices.shape[0] == 0

    @property
    def is_singleton(self):
        return self.vertices.shape[0] == 1 and self.generators.shape[0] == 0

    def translate(self, shift):
        if self.is_empty:
            return self
        shift = np.asarray(shift, dtype=float).reshape(-1)
        return ConvexSet(self.vertices + shift, self.generators)

    def to_json(self):
        return {
            "vertices": [list(map(float, row)) for row in self.vertices],
            "cone": [list(map(float, row)) for row in self.generators],
        }

    @staticmethod
    def from_json(obj, n):
        verts = obj.get("vertices", [])
        cone = obj.get("cone", [])
        if len(verts) == 0:
            return ConvexSet.empty(n)
        return ConvexSet.make(verts, cone, n=n)


def _conic_member(g, others, tol=1e-9):
    """Whether g lies in the cone spanned by the given rows."""
    if len(others) == 0:
        return bool(np.max(np.abs(g)) <= tol)
    n = len(g)
    res = linprog(
        c=np.zeros(len(others)),
        A_eq=np.asarray(others).T,
        b_eq=g,
        bounds=[(0, None)] * len(others),
        method=_LP_METHOD,
    )
    if res.status == 0:
        err = np.asarray(others).T @ res.x - g
        return bool(np.max(np.abs(err)) <= tol)
    return False


def _canonicalize(vertices, generators):
    """Remove redundant vertices and generators, normalize and sort."""
    n = vertices.shape[1]

    # Generators: drop zeros, normalize, dedupe, prune conic-redundant.
    gens = []
    for g in generators:
        norm = np.linalg.norm(g)
        if norm > RAY_TOL:
            gens.append(g / norm)
    g = _dedupe_rows(np.asarray(gens) if gens else generators[:0], 1e-12)
    if len(g) > 1:
        keep = list(range(len(g)))
        for i in range(len(g)):
            if i not in keep:
                continue
            others = [g[j] for j in keep if j != i]
            if _conic_member(g[i], others):
                keep.remove(i)
        g = g[sorted(keep)]

    # Vertices: dedupe, then prune any vertex inside hull(others) + cone.
    v = _dedupe_rows(vertices, 1e-12)
    if n == 1 and len(g) == 0 and len(v) > 2:
        v = np.array([[v[:, 0].min()], [v[:, 0].max()]])
    elif len(v) > 1:
        keep = list(range(len(v)))
        for i in range(len(v)):
            if len(keep) == 1:
                break
            if i not in keep:
                continue
            others = np.asarray([v[j] for j in keep if j != i])
            if _hull_cone_member(v[i], others, g):
                keep.remove(i)
        v = v[sorted(keep)]

    return _lexsorted(v), _lexsorted(g)


def _hull_cone_member(point, verts, gens, tol=1e-10):
    """Whether point lies in hull(verts) + cone(gens), exactly up to tol."""
    if len(verts) == 0:
        return False
    if len(verts) == 1 and len(gens) == 0:
        return bool(np.max(np.abs(point - verts[0])) <= tol)
    return _linf_rep_distance(point, verts, gens) <= tol


def _linf_rep_distance(point, verts, gens):
    """min over hull+cone representations of the sup-norm deviation (an LP)."""
    k, m = len(verts), len(gens)
    n = len(point)
    # variables: lambda (k), mu (m), t
    c = np.zeros(k + m + 1)
    c[-1] = 1.0
    block = np.hstack([verts.T, gens.T if m else np.zeros((n, 0))])
    ones = np.ones((n, 1))
    A_ub = np.vstack(
        [
            np.hstack([block, -ones]),
            np.hstack([-block, -ones]),
        ]
    )
    b_ub = np.concatenate([point, -point])
    A_eq = np.zeros((1, k + m + 1))
    A_eq[0, :k] = 1.0
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=[1.0],
        bounds=[(0, None)] * (k + m + 1),
        method=_LP_METHOD,
    )
    if res.status != 0:
        raise SolverFailError(f"membership LP failed with status {res.status}")
    return float(res.fun)


def linf_distance(C, point):
    """Sup-norm distance from ``point`` to the set (0 when inside)."""
    if C.is_empty:
        return math.inf
    point = np.asarray(point, dtype=float).reshape(-1)
    if C.is_singleton:
        return float(np.max(np.abs(point - C.vertices[0])))
    return _linf_rep_distance(point, C.vertices, C.generators)


def contains_point(C, point, tol=GEOM_TOL):
    """Membership test with explicit tolerance on the sup-norm distance."""
    return linf_distance(C, point) <= tol


# ----------------------------------------------------------------------
# Support function, faces, normal cones, sums, hulls
# ----------------------------------------------------------------------


def support_function(C, v):
    """Supremum of <., v> over the set; -inf when empty, +inf when unbounded.

    A recession generator with a strictly positive pairing against ``v``
    makes the supremum infinite; the positivity threshold is ``RAY_TOL``
    scaled by the magnitude of ``v``.
    """
    if C.is_empty:
        return -math.inf
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != C.n:
        raise DimensionMismatchError("direction dimension mismatch")
    vscale = max(1.0, float(np.linalg.norm(v)))
    if C.generators.shape[0] and float(np.max(C.generators @ v)) > RAY_TOL * vscale:
        return math.inf
    return float(np.max(C.vertices @ v))


def face(C, v):
    """Exposed face of the set in direction ``v``.

    The face collects the vertices attaining the support value within
    ``GEOM_TOL`` and the recession generators orthogonal to ``v``.  The
    direction must be nonzero and the set bounded in that direction.
    """
    if C.is_empty:
        raise InputError("face of the empty set is undefined")
    v = np.asarray(v, dtype=float).reshape(-1)
    if np.linalg.norm(v) == 0.0:
        raise InputError("face direction must be nonzero")
    sigma = support_function(C, v)
    if math.isinf(sigma):
        raise FaceUndefinedError(f"set is unbounded in direction {v.tolist()}")
    vscale = max(1.0, float(np.linalg.norm(v)))
    tol = GEOM_TOL * max(1.0, abs(sigma), vscale)
    verts = C.vertices[C.vertices @ v >= sigma - tol]
    if C.generators.shape[0]:
        gens = C.generators[np.abs(C.generators @ v) <= RAY_TOL * vscale]
    else:
        gens = C.generators
    return ConvexSet.make(verts, gens, n=C.n)


def normal_cone(D, x, tol=GEOM_TOL):
    """Normal cone of an H-polytope at a feasible point.

    The cone is spanned by the normals of the rows active at ``x`` (within
    ``tol``); at interior points it is {0}.  Infeasible points raise.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if not D.contains(x, tol=tol):
        raise InputError(f"point {x.tolist()} is not in the polytope")
    active = D.active_rows(x, tol=tol)
    gens = D.normals[active] if len(active) else np.zeros((0, D.n))
    return ConvexSet.make(np.zeros((1, D.n)), gens, n=D.n)


def minkowski_sum(A, B):
    """Minkowski sum of two sets: pairwise vertex sums, joined cones."""
    if A.n != B.n:
        raise DimensionMismatchError("summands live in different dimensions")
    if A.is_empty or B.is_empty:
        return ConvexSet.empty(A.n)
    sums = (A.vertices[:, None, :] + B.vertices[None, :, :]).reshape(-1, A.n)
    gens = np.vstack([A.generators, B.generators])
    return ConvexSet.make(sums, gens, n=A.n)


def convex_hull(points):
    """Convex hull of a finite point list as a canonical ConvexSet."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.shape[0] == 0:
        raise InputError("convex_hull needs at least one point")
    return ConvexSet.make(pts)


# ----------------------------------------------------------------------
# Minimum-norm point
# ----------------------------------------------------------------------


class MinNormResult(NamedTuple):
    """Minimizer of the dual norm over a set, with its optimality residual."""

    point: np.ndarray
    value: float
    residual: float


def _grad_half_sq(z, q):
    norm = np.linalg.norm(z, ord=q)
    if norm == 0.0:
        return np.zeros_like(z)
    return norm ** (2.0 - q) * np.abs(z) ** (q - 1.0) * np.sign(z)


def _kkt_residual(z, verts, gens, q):
    """Optimality certificate for min (1/2)||.||_q^2 over hull+cone."""
    g = _grad_half_sq(z, q)
    gap = float(g @ z - np.min(verts @ g))
    if gens.shape[0]:
        pair = gens @ g
        gap += float(np.sum(np.maximum(0.0, -pair)))
    return max(0.0, gap)


def _min_norm_q2(verts, gens):
    """Exact support enumeration for the Euclidean case.

    Enumerates candidate supports (subset of vertices, subset of
    generators), solves the equality KKT system for each, and returns the
    first solution passing feasibility and optimality.  This is the
    desk-scale realization of the classical minimum-norm-point scheme.
    """
    k, m = len(verts), len(gens)
    n = verts.shape[1]
    vert_sets = [s for size in range(1, k + 1) for s in itertools.combinations(range(k), size)]
    gen_sets = [s for size in range(0, m + 1) for s in itertools.combinations(range(m), size)]
    best = None
    for sv in vert_sets:
        V = verts[list(sv)]
        for sg in gen_sets:
            G = gens[list(sg)] if sg else np.zeros((0, n))
            a, b = len(sv), len(sg)
            # unknowns: lambda (a), mu (b), nu (1)
            A = np.zeros((a + b + 1, a + b + 1))
            rhs = np.zeros(a + b + 1)
            VG = np.vstack([V, G]) if b else V
            gram = VG @ VG.T
            A[:a, :a] = gram[:a, :a]
            if b:
                A[:a, a : a + b] = gram[:a, a:]
                A[a : a + b, :a] = gram[a:, :a]
                A[a : a + b, a : a + b] = gram[a:, a:]
            A[:a, -1] = -1.0
            A[-1, :a] = 1.0
            rhs[-1] = 1.0
            try:
                sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
            except np.linalg.LinAlgError:
                continue
            if np.max(np.abs(A @ sol - rhs)) > 1e-9:
                continue
            lam, mu = sol[:a], sol[a : a + b]
            if np.min(lam) < -1e-10 or (b and np.min(mu) < -1e-10):
                continue
            z = V.T @ lam + (G.T @ mu if b else 0.0)
            z = np.asarray(z, dtype=float).reshape(-1)
            res = _kkt_residual(z, verts, gens, 2.0)
            if res <= MIN_NORM_RESIDUAL:
                return z, res
            if best is None or res < best[1]:
                best = (z, res)
    if best is not None:
        return best
    raise SolverFailError("min-norm support enumeration found no candidate")


def _line_search(f_dir, lo, hi):
    """Exact minimization of a scalar convex function's derivative on [lo, hi].

    Falls back to plain bisection when the bracketed root is degenerate
    (derivative values flatten below roundoff near the minimizer, which
    stalls inverse-quadratic stepping).
    """
    dlo = f_dir(lo)
    if dlo >= 0.0:
        return lo
    dhi = f_dir(hi)
    if dhi <= 0.0:
        return hi
    try:
        return brentq(f_dir, lo, hi, xtol=1e-13, maxiter=120)
    except RuntimeError:
        return bisect(f_dir, lo, hi, xtol=1e-12, maxiter=200)


def _min_norm_fw(verts, gens, q, max_iter=400):
    """Conditional-gradient loop with away steps and cone coordinate descent.

    Minimizes (1/2)||.||_q^2 over hull(verts) + cone(gens) with exact line
    searches, then polishes on the identified support with a constrained
    smooth solve.  Stops on a KKT residual below ``MIN_NORM_RESIDUAL``.
    """
    k, m = len(verts), len(gens)
    n = verts.shape[1]
    lam = np.zeros(k)
    start = int(np.argmin(np.linalg.norm(verts, ord=q, axis=1) if n > 1 else np.abs(verts[:, 0])))
    lam[start] = 1.0
    mu = np.zeros(m)

    def point_of(lam, mu):
        z = verts.T @ lam
        if m:
            z = z + gens.T @ mu
        return z

    z = point_of(lam, mu)
    for _ in range(max_iter):
        # cone coordinate steps
        for j in range(m):
            gj = gens[j]
            dphi = lambda t: float(_grad_half_sq(z + (t - mu[j]) * gj, q) @ gj)
            hi = mu[j] + 1.0
            while dphi(hi) < 0.0 and hi < 1e6:
                hi *= 2.0
            t_new = _line_search(dphi, 0.0, hi)
            z = z + (t_new - mu[j]) * gj
            mu[j] = t_new
        grad = _grad_half_sq(z, q)
        scores = verts @ grad
        i_fw = int(np.argmin(scores))
        active = np.flatnonzero(lam > 1e-14)
        i_aw = int(active[np.argmax(scores[active])])
        u = verts.T @ lam
        gap_poly = float(grad @ u - scores[i_fw])
        residual = _kkt_residual(z, verts, gens, q)
        if residual <= MIN_NORM_RESIDUAL * 0.1:
            return z, residual
        use_away = (scores[i_aw] - grad @ u) > gap_poly and lam[i_aw] < 1.0 - 1e-14
        if use_away:
            d = u - verts[i_aw]
            s_max = lam[i_aw] / (1.0 - lam[i_aw])
        else:
            d = verts[i_fw] - u
            s_max = 1.0
        if np.linalg.norm(d) <= 1e-16:
            break
        dphi = lambda s: float(_grad_half_sq(z + s * d, q) @ d)
        s = _line_search(dphi, 0.0, s_max)
        z = z + s * d
        if use_away:
            lam *= 1.0 + s
            lam[i_aw] -= s
        else:
            lam *= 1.0 - s
            lam[i_fw] += s
        lam = np.maximum(lam, 0.0)
        lam /= lam.sum()

    # polish on the identified support
    sup_v = np.flatnonzero(lam > 1e-10)
    if len(sup_v) == 0:
        sup_v = np.array([int(np.argmax(lam))])
    sup_g = np.flatnonzero(mu > 1e-10) if m else np.array([], dtype=int)
    V = verts[sup_v]
    G = gens[sup_g] if len(sup_g) else np.zeros((0, n))
    a, b = len(sup_v), len(sup_g)

    def fobj(u):
        zz = V.T @ u[:a] + (G.T @ u[a:] if b else 0.0)
        zz = np.asarray(zz).reshape(-1)
        gr = _grad_half_sq(zz, q)
        val = 0.5 * np.linalg.norm(zz, ord=q) ** 2
        grad_u = np.concatenate([V @ gr, G @ gr if b else np.zeros(0)])
        return val, grad_u

    u0 = np.concatenate([lam[sup_v] / lam[sup_v].sum(), mu[sup_g] if b else np.zeros(0)])
    cons = [{"type": "eq", "fun": lambda u: u[:a].sum() - 1.0, "jac": lambda u: np.concatenate([np.ones(a), np.zeros(b)])}]
    out = minimize(
        fobj,
        u0,
        jac=True,
        bounds=[(0.0, None)] * (a + b),
        constraints=cons,
        method="SLSQP",
        options={"maxiter": 300, "ftol": 1e-16},
    )
    if out.x is not None:
        u = np.maximum(out.x, 0.0)
        if u[:a].sum() > 0:
            u[:a] /= u[:a].sum()
            z_pol = V.T @ u[:a] + (G.T @ u[a:] if b else 0.0)
            z_pol = np.asarray(z_pol).reshape(-1)
            if _kkt_residual(z_pol, verts, gens, q) < _kkt_residual(z, verts, gens, q):
                z = z_pol
    residual = _kkt_residual(z, verts, gens, q)
    return z, residual


def min_norm_point(C, space):
    """Minimal dual-norm point of a nonempty set in the dual of ``space``.

    Strict convexity of the l^q norm makes the minimizer unique.  The
    Euclidean case is solved by exact support enumeration; other exponents
    use a conditional-gradient loop with away steps and a constrained
    polish.  The returned residual is the duality-gap certificate and is
    required to be at most ``MIN_NORM_RESIDUAL``.

    Parameters
    ----------
    C : ConvexSet
        Nonempty set of dual vectors.
    space : NormedSpace
        Primal space; the dual norm is l^q with q = p/(p-1).

    Returns
    -------
    MinNormResult
    """
    if C.is_empty:
        raise InputError("min_norm_point of the empty set")
    if C.n != space.n:
        raise DimensionMismatchError("set dimension does not match the space")
    q = space.q
    if C.is_singleton:
        z = C.vertices[0].copy()
        return MinNormResult(z, float(np.linalg.norm(z, ord=q)), 0.0)
    if abs(q - 2.0) < 1e-12 and len(C.vertices) + len(C.generators) <= 14:
        z, res = _min_norm_q2(C.vertices, C.generators)
    else:
        z, res = _min_norm_fw(C.vertices, C.generators, q)
    if res > MIN_NORM_RESIDUAL:
        raise SolverFailError("min_norm_point residual above tolerance", residual=res)
    return MinNormResult(z, float(np.linalg.norm(z, ord=q)), res)


def set_dual_distance(C, w, space):
    """Dual-norm distance from vector ``w`` to the set (inf when empty)."""
    if C.is_empty:
        return math.inf
    return min_norm_point(C.translate(-np.asarray(w, dtype=float)), space).value


# ----------------------------------------------------------------------
# Direction grids, facet normals, set distance
# ----------------------------------------------------------------------


def direction_grid(n, size=None, seed=0):
    """Deterministic grid of unit directions in R^n.

    Dimension 1 uses {+1, -1}; dimension 2 a uniform angular grid (default
    360); dimension 3 a Fibonacci sphere (default 1000); higher dimensions
    fall back to seeded normalized Gaussians (default 2000).
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        size = 360 if size is None else size
        ang = 2.0 * np.pi * np.arange(size) / size
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if n == 3:
        size = 1000 if size is None else size
        k = np.arange(size) + 0.5
        phi = np.arccos(1.0 - 2.0 * k / size)
        theta = np.pi * (1.0 + math.sqrt(5.0)) * k
        return np.column_stack(
            [np.cos(theta) * np.sin(phi), np.sin(theta) * np.sin(phi), np.cos(phi)]
        )
    size = 2000 if size is None else size
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((size, n))
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def facet_normals(C, max_candidates=200000):
    """Candidate facet normals of a polytope-plus-cone set.

    Returns a superset of the outer normals of all facets, plus both signs
    of an orthonormal basis of the affine hull's complement when the set is
    lower-dimensional, plus the coordinate axes.  Support-function equality
    of two sets on the union of both candidate lists certifies set equality
    for this class.

    Candidates are built by brute force: each (d-1)-subset of the difference
    vectors spanning a hyperplane of the affine hull contributes its unit
    normal, kept only if the set is bounded in that direction.
    """
    if C.is_empty:
        return np.eye(1 * C.n)[:0]
    n = C.n
    v0 = C.vertices[0]
    diffs = [v - v0 for v in C.vertices[1:]] + [g for g in C.generators]
    out = [np.eye(n), -np.eye(n)]

    if diffs:
        D = np.asarray(diffs)
        # orthonormal basis of the span and its complement
        u_svd, s, _ = np.linalg.svd(D.T, full_matrices=True)
        rank = int(np.sum(s > 1e-10)) if len(s) else 0
        basis = u_svd[:, :rank]
        comp = u_svd[:, rank:]
    else:
        rank = 0
        basis = np.zeros((n, 0))
        comp = np.eye(n)

    for j in range(comp.shape[1]):
        out.append(comp[:, j].reshape(1, -1))
        out.append(-comp[:, j].reshape(1, -1))

    d = rank
    if d >= 1:
        # within-hull candidates from (d-1)-subsets of the difference set
        proj = [basis.T @ dd for dd in diffs]
        combos = itertools.combinations(range(len(proj)), d - 1)
        count = 0
        cands = []
        for sub in combos:
            count += 1
            if count > max_candidates:
                raise InputError("facet enumeration too large for this set")
            M = np.asarray([proj[i] for i in sub]) if sub else np.zeros((0, d))
            _, s, vt = np.linalg.svd(M, full_matrices=True) if M.size else (None, np.zeros(0), np.eye(d))
            null = vt[int(np.sum(s > 1e-10)) :]
            for u_in in null:
                u_full = basis @ u_in
                norm = np.linalg.norm(u_full)
                if norm < 1e-12:
                    continue
                u_full = u_full / norm
                for sgn in (1.0, -1.0):
                    cand = sgn * u_full
                    if not math.isinf(support_function(C, cand)):
                        cands.append(cand)
        if cands:
            out.append(np.asarray(cands))

    stacked = np.vstack(out)
    return _dedupe_rows(stacked, 1e-9)


@dataclass(frozen=True)
class SetDistanceReport:
    """Support-gap comparison of two sets over a direction grid.

    Attributes
    ----------
    max_gap : float
        Largest absolute support gap over directions where both values are
        finite; 0.0 when no such direction exists.
    mismatched : list
        Directions where exactly one support value is infinite.
    per_direction : ndarray
        Absolute gap per direction (inf on mismatches, 0 where both are
        infinite with the same sign).
    directions : ndarray
        The grid used.
    """

    max_gap: float
    mismatched: list
    per_direction: np.ndarray
    directions: np.ndarray

    @property
    def equal_within(self):
        return (not self.mismatched, self.max_gap)


def set_distance_report(A, B, directions):
    """Compare support functions of two sets over the given directions."""
    directions = np.asarray(directions, dtype=float)
    if directions.ndim != 2:
        raise InputError("directions must be a 2-d array")
    gaps = np.zeros(len(directions))
    mismatched = []
    for i, v in enumerate(directions):
        sa = support_function(A, v)
        sb = support_function(B, v)
        if math.isinf(sa) or math.isinf(sb):
            if sa == sb:
                gaps[i] = 0.0
            else:
                gaps[i] = math.inf
                mismatched.append(v.copy())
        else:
            gaps[i] = abs(sa - sb)
    finite = gaps[np.isfinite(gaps)]
    max_gap = float(finite.max()) if finite.size else 0.0
    return SetDistanceReport(
        max_gap=max_gap,
        mismatched=mismatched,
        per_direction=gaps,
        directions=directions,
    )


# ----------------------------------------------------------------------
# H-representation polytopes
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class PolytopeH:
    """Intersection of halfspaces <normal, y> <= offset.

    No rows means the whole space.  Rows are stored as given; consistency
    (nonempty interior and the like) is checked by the operator layer where
    it is required, not here.
    """

    normals: np.ndarray
    offsets: np.ndarray
    n: int = field(default=0)

    def __post_init__(self):
        normals = np.asarray(self.normals, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if normals.size == 0:
            if self.n < 1:
                raise InputError("free PolytopeH needs an explicit dimension n")
            normals = np.zeros((0, self.n))
        if normals.ndim != 2:
            raise InputError("normals must be a 2-d array")
        if normals.shape[0] != offsets.shape[0]:
            raise InputError("normals and offsets disagree in length")
        if not (np.all(np.isfinite(normals)) and np.all(np.isfinite(offsets))):
            raise InputError("PolytopeH entries must be finite")
        if np.any(np.linalg.norm(normals, axis=1) <= RAY_TOL) and normals.shape[0]:
            raise InputError("PolytopeH rows must have nonzero normals")
        normals.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "n", normals.shape[1])

    @staticmethod
    def free(n):
        """The whole space R^n (no constraints)."""
        return PolytopeH(np.zeros((0, n)), np.zeros(0), n=n)

    @staticmethod
    def box(lower, upper):
        """Axis-aligned box {lower <= y <= upper}."""
        lower = np.asarray(lower, dtype=float).reshape(-1)
        upper = np.asarray(upper, dtype=float).reshape(-1)
        if lower.shape != upper.shape:
            raise InputError("box bounds disagree in length")
        if np.any(lower > upper):
            raise InputError("box lower bound exceeds upper bound")
        n = lower.shape[0]
        eye = np.eye(n)
        return PolytopeH(np.vstack([eye, -eye]), np.concatenate([upper, -lower]))

    @property
    def num_rows(self):
        return self.normals.shape[0]

    def contains(self, x, tol=GEOM_TOL):
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.n:
            raise DimensionMismatchError("point dimension mismatch")
        if self.num_rows == 0:
            return True
        slack = self.offsets - self.normals @ x
        scale = np.maximum(1.0, np.abs(self.offsets))
        return bool(np.all(slack >= -tol * scale))

    def active_rows(self, x, tol=GEOM_TOL):
        """Indices of rows tight at x (within tol, scaled by the offset)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        if self.num_rows == 0:
            return np.array([], dtype=int)
        slack = self.offsets - self.normals @ x
        scale = np.maximum(1.0, np.abs(self.offsets))
        return np.flatnonzero(np.abs(slack) <= tol * scale)

    def intersection(self, other):
        if other.n != self.n:
            raise DimensionMismatchError("polytope dimensions disagree")
        return PolytopeH(
            np.vstack([self.normals, other.normals]),
            np.concatenate([self.offsets, other.offsets]),
            n=self.n,
        )

    def chebyshev_margin(self):
        """Radius of the largest inscribed ball; inf when unconstrained.

        Solves the standard linear program; an unbounded radius (for
        example a halfspace) also reports inf.  An empty feasible region
        reports -inf.
        """
        if self.num_rows == 0:
            return math.inf
        m = self.num_rows
        norms = np.linalg.norm(self.normals, axis=1)
        c = np.zeros(self.n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([self.normals, norms.reshape(-1, 1)])
        res = linprog(
            c,
            A_ub=A_ub,
            b_ub=self.offsets,
            bounds=[(None, None)] * self.n + [(0, None)],
            method=_LP_METHOD,
        )
        if res.status == 3:
            return math.inf
        if res.status == 2:
            return -math.inf
        if res.status != 0:
            raise SolverFailError(f"chebyshev LP failed with status {res.status}")
        return float(res.x[-1])

    def support(self, v):
        """sup of <v, y> over the polytope (+inf when unbounded, -inf empty)."""
        v = np.asarray(v, dtype=float).reshape(-1)
        if self.num_rows == 0:
            return math.inf if np.linalg.norm(v) > 0 else 0.0
        res = linprog(
            -v,
            A_ub=self.normals,
            b_ub=self.offsets,
            bounds=[(None, None)] * self.n,
            method=_LP_METHOD,
        )
        if res.status == 3:
            return math.inf
        if res.status == 2:
            return -math.inf
        if res.status != 0:
            raise SolverFailError(f"support LP failed with status {res.status}")
        return float(-res.fun)

    def includes(self, other, tol=1e-9):
        """Whether ``other`` is a subset of this polytope (row-wise LPs)."""
        for a, b in zip(self.normals, self.offsets):
            sup = other.support(a)
            if sup == -math.inf:
                return True  # other is empty
            if sup > b + tol * max(1.0, abs(b)):
                return False
        return True

    def same_region(self, other, tol=1e-9):
        return self.includes(other, tol) and other.includes(self, tol)

    def vertices(self):
        """Basic feasible solutions: vertices of the (pointed) polytope.

        Brute force over row subsets of size n; intended for desk-scale
        domains only.
        """
        if self.num_rows < self.n:
            return np.zeros((0, self.n))
        out = []
        for sub in itertools.combinations(range(self.num_rows), self.n):
            A = self.normals[list(sub)]
            b = self.offsets[list(sub)]
            if abs(np.linalg.det(A)) < 1e-12:
                continue
            y = np.linalg.solve(A, b)
            if self.contains(y, tol=1e-8):
                out.append(y)
        if not out:
            return np.zeros((0, self.n))
        return _dedupe_rows(np.asarray(out), 1e-9)

    def bounding_box(self, center=None, half_width=3.0):
        """Per-coordinate bounds for rejection sampling.

        Uses support LPs; unbounded coordinates fall back to a box of the
        given half width around ``center`` (default the origin).
        """
        center = np.zeros(self.n) if center is None else np.asarray(center, dtype=float)
        lo = np.empty(self.n)
        hi = np.empty(self.n)
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = 1.0
            up = self.support(e)
            dn = -self.support(-e)
            hi[k] = center[k] + half_width if math.isinf(up) else up
            lo[k] = center[k] - half_width if math.isinf(dn) else dn
        return lo, hi

    def to_json(self):
        return {
            "normals": [list(map(float, row)) for row in self.normals],
            "offsets": [float(b) for b in self.offsets],
            "n": int(self.n),
        }

    @staticmethod
    def from_json(obj):
        n = int(obj.get("n", 0)) or (len(obj["normals"][0]) if obj.get("normals") else 0)
        if not obj.get("normals"):
            return PolytopeH.free(n)
        return PolytopeH(obj["normals"], obj["offsets"], n=n)
