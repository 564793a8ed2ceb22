"""Catalog of set-valued monotone operators and their solvers.

Operators map points of R^n to closed convex subsets of the dual space,
represented as :class:`~monotonelab.convex_sets.ConvexSet` values.  The
catalog covers subdifferentials of polyhedral convex functions, normal cone
operators of H-polytopes, monotone affine maps, the duality mapping itself,
and sums of these.  Construction runs a monotonicity certificate and fails
loudly; evaluation outside the domain returns the empty sentinel.

The regularized resolvent solves the inclusion

    0 in (1/lam) J(y - x) + A(y)

by enumerating candidate active sets: each choice of active pieces and
active domain rows yields a small square system (affine when p = 2 and all
single-valued parts are affine, otherwise solved by a Newton-type root
finder), feasibility-checked and certified by the distance from the implied
dual element to the value set.  Trajectories over a decreasing lambda
schedule track the induced approximations of the minimal-norm selection.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import root

from .convex_sets import (
    GEOM_TOL,
    ConvexSet,
    PolytopeH,
    minkowski_sum,
    min_norm_point,
    set_dual_distance,
)
from .errors import (
    ConstructionError,
    DimensionMismatchError,
    InputError,
    NoSelectionError,
    SolverFailError,
)
from .geometry import NormedSpace

__all__ = [
    "OperatorSpec",
    "PolyhedralSubdiff",
    "NormalConeOperator",
    "LinearOperator",
    "DualityMapOperator",
    "OperatorSum",
    "MonotoneReport",
    "ResolventResult",
    "TrajectoryRecord",
    "Trajectory",
    "check_monotone",
    "min_norm_selection",
    "resolvent_solve",
    "yosida_trajectory",
    "default_lambda_schedule",
]

# Activity tolerance for pieces of a polyhedral maximum.
ACTIVE_TOL = 1e-9
# Required inclusion residual for the resolvent.
RESOLVENT_TOL = 1e-8
# Minimal eigenvalue allowed for the symmetric part of an affine operator.
PSD_SLACK = -1e-12
# Minimal Chebyshev margin of the intersected domains of a sum.
SUM_INTERIOR_MARGIN = 1e-6
# Slack on the per-step trajectory norm bound.
TRAJ_BOUND_SLACK = 1e-6


def _vec(x, n, name="x"):
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != n:
        raise DimensionMismatchError(f"{name}: expected length {n}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name}: entries must be finite")
    return x


class OperatorSpec:
    """Base class for catalog operators: a domain plus a value map."""

    kind = "abstract"

    @property
    def n(self):
        return self.domain.n

    def evaluate(self, x):
        """Value set at ``x``; the empty sentinel outside the domain."""
        raise NotImplementedError

    def in_domain(self, x, tol=GEOM_TOL):
        return self.domain.contains(x, tol=tol)


@dataclass(frozen=True)
class PolyhedralSubdiff(OperatorSpec):
    """Subdifferential of y -> max_i (<slope_i, y> + intercept_i).

    The function is finite everywhere, so the domain is the whole space.
    The value at ``x`` is the convex hull of the slopes active at ``x``.
    """

    slopes: np.ndarray
    intercepts: np.ndarray
    kind = "subdiff_poly"

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=float)
        if slopes.ndim == 1:
            slopes = slopes.reshape(-1, 1)
        intercepts = np.asarray(self.intercepts, dtype=float).reshape(-1)
        if slopes.ndim != 2 or slopes.shape[0] == 0:
            raise ConstructionError("subdiff_poly needs at least one affine piece")
        if slopes.shape[0] != intercepts.shape[0]:
            raise ConstructionError("slopes and intercepts disagree in length")
        if not (np.all(np.isfinite(slopes)) and np.all(np.isfinite(intercepts))):
            raise ConstructionError("subdiff_poly pieces must be finite")
        slopes.setflags(write=False)
        intercepts.setflags(write=False)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "intercepts", intercepts)

    @property
    def domain(self):
        return PolytopeH.free(self.slopes.shape[1])

    def function_value(self, x):
        x = _vec(x, self.n)
        return float(np.max(self.slopes @ x + self.intercepts))

    def active_pieces(self, x, tol=ACTIVE_TOL):
        x = _vec(x, self.n)
        vals = self.slopes @ x + self.intercepts
        m = float(np.max(vals))
        return np.flatnonzero(vals >= m - tol * max(1.0, abs(m)))

    def evaluate(self, x):
        idx = self.active_pieces(x)
        return ConvexSet.make(self.slopes[idx], n=self.n)


@dataclass(frozen=True)
class NormalConeOperator(OperatorSpec):
    """Normal cone operator of a nonempty H-polytope."""

    polytope: PolytopeH
    kind = "normal_cone"

    def __post_init__(self):
        if self.polytope.chebyshev_margin() == -math.inf:
            raise ConstructionError("normal_cone domain is empty")

    @property
    def domain(self):
        return self.polytope

    def evaluate(self, x):
        x = _vec(x, self.n)
        if not self.polytope.contains(x):
            return ConvexSet.empty(self.n)
        active = self.polytope.active_rows(x)
        gens = self.polytope.normals[active] if len(active) else np.zeros((0, self.n))
        return ConvexSet.make(np.zeros((1, self.n)), gens, n=self.n)


@dataclass(frozen=True)
class LinearOperator(OperatorSpec):
    """Affine map y -> M y + shift with positive semidefinite symmetric part."""

    matrix: np.ndarray
    shift: np.ndarray
    kind = "linear"

    def __post_init__(self):
        M = np.asarray(self.matrix, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ConstructionError("linear operator matrix must be square")
        b = np.asarray(self.shift, dtype=float).reshape(-1)
        if b.shape[0] != M.shape[0]:
            raise ConstructionError("linear operator shift length mismatch")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(b))):
            raise ConstructionError("linear operator entries must be finite")
        sym = 0.5 * (M + M.T)
        lam_min = float(np.linalg.eigvalsh(sym).min())
        if lam_min < PSD_SLACK:
            raise ConstructionError(
                f"linear operator is not monotone: symmetric part has eigenvalue {lam_min:.3e}"
            )
        M.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "shift", b)

    @property
    def domain(self):
        return PolytopeH.free(self.matrix.shape[0])

    def value(self, x):
        return self.matrix @ _vec(x, self.n) + self.shift

    def evaluate(self, x):
        return ConvexSet.singleton(self.value(x))


@dataclass(frozen=True)
class DualityMapOperator(OperatorSpec):
    """The duality mapping of a fixed l^p space as a single-valued operator."""

    space: NormedSpace
    kind = "duality_map"

    @property
    def domain(self):
        return PolytopeH.free(self.space.n)

    def value(self, x):
        return self.space.duality_map(_vec(x, self.n))

    def evaluate(self, x):
        return ConvexSet.singleton(self.value(x))


@dataclass(frozen=True)
class OperatorSum(OperatorSpec):
    """Pointwise Minkowski sum of catalog operators.

    Maximality of the sum needs the domain interiors to intersect; the
    certificate requires the Chebyshev margin of the intersected domain
    rows to reach ``SUM_INTERIOR_MARGIN``.
    """

    parts: tuple
    kind = "sum"

    def __post_init__(self):
        parts = tuple(self.parts)
        if len(parts) < 1:
            raise ConstructionError("sum needs at least one part")
        n = parts[0].n
        for part in parts:
            if not isinstance(part, OperatorSpec):
                raise ConstructionError("sum parts must be operators")
            if part.n != n:
                raise ConstructionError("sum parts live in different dimensions")
        dom = PolytopeH.free(n)
        for part in parts:
            dom = dom.intersection(part.domain)
        margin = dom.chebyshev_margin()
        if margin < SUM_INTERIOR_MARGIN:
            raise ConstructionError(
                f"sum domains have interior margin {margin:.3e} < {SUM_INTERIOR_MARGIN}"
            )
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "_domain", dom)

    @property
    def domain(self):
        return self._domain

    def evaluate(self, x):
        x = _vec(x, self.n)
        total = None
        for part in self.parts:
            val = part.evaluate(x)
            if val.is_empty:
                return ConvexSet.empty(self.n)
            total = val if total is None else minkowski_sum(total, val)
        return total


# ----------------------------------------------------------------------
# Structural decomposition shared by the resolvent and the limit analysis
# ----------------------------------------------------------------------


class FlatParts(NamedTuple):
    subdiffs: list
    cones: list
    smooths: list


def flatten_operator(A):
    """Recursively split an operator into subdifferential, cone, and smooth parts."""
    if isinstance(A, OperatorSum):
        subs, cones, smooths = [], [], []
        for part in A.parts:
            f = flatten_operator(part)
            subs.extend(f.subdiffs)
            cones.extend(f.cones)
            smooths.extend(f.smooths)
        return FlatParts(subs, cones, smooths)
    if isinstance(A, PolyhedralSubdiff):
        return FlatParts([A], [], [])
    if isinstance(A, NormalConeOperator):
        return FlatParts([], [A], [])
    if isinstance(A, (LinearOperator, DualityMapOperator)):
        return FlatParts([], [], [A])
    raise InputError(f"unsupported operator kind {type(A).__name__}")


def _smooth_value(smooths, y):
    total = np.zeros(len(y))
    for s in smooths:
        total = total + s.value(y)
    return total


def _smooth_affine_data(smooths, p, n):
    """(M, b) when every smooth part is affine under exponent p, else None."""
    M = np.zeros((n, n))
    b = np.zeros(n)
    for s in smooths:
        if isinstance(s, LinearOperator):
            M += s.matrix
            b += s.shift
        elif isinstance(s, DualityMapOperator) and abs(s.space.p - 2.0) < 1e-12:
            M += np.eye(n)
        else:
            return None
    return M, b


# ----------------------------------------------------------------------
# Monotonicity sampling and minimal selections
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class MonotoneReport:
    """Sampled monotonicity certificate.

    ``min_pairing`` is the smallest <xstar - ystar, x - y> over sampled
    graph pairs; monotone operators keep it above a small negative
    roundoff threshold.
    """

    min_pairing: float
    worst_pair: tuple
    samples: int


def _sample_domain_points(A, rng, count, half_width=3.0):
    lo, hi = A.domain.bounding_box(half_width=half_width)
    out = []
    tries = 0
    while len(out) < count and tries < 200 * count:
        y = rng.uniform(lo, hi)
        tries += 1
        if A.domain.contains(y):
            out.append(y)
    if not out:
        raise SolverFailError("could not sample the operator domain")
    return out


def _sample_value_element(value, rng, cone_scale=2.0):
    k = len(value.vertices)
    weights = rng.dirichlet(np.ones(k)) if k > 1 else np.ones(1)
    el = value.vertices.T @ weights
    if value.generators.shape[0]:
        mu = rng.uniform(0.0, cone_scale, size=len(value.generators))
        el = el + value.generators.T @ mu
    return el


def check_monotone(A, space, samples=120, seed=0):
    """Sample graph pairs and report the minimal monotonicity pairing.

    Draws ``samples`` points from the domain, one value element each, and
    scans all pairs.  For catalog operators the minimum stays above
    -1e-10 times the pair scale.
    """
    rng = np.random.default_rng(seed)
    pts = _sample_domain_points(A, rng, samples)
    graph = []
    for y in pts:
        val = A.evaluate(y)
        if val.is_empty:
            continue
        graph.append((y, _sample_value_element(val, rng)))
    min_pairing = math.inf
    worst = None
    for (x1, s1), (x2, s2) in itertools.combinations(graph, 2):
        pairing = float((s1 - s2) @ (x1 - x2))
        if pairing < min_pairing:
            min_pairing = pairing
            worst = ((x1, s1), (x2, s2))
    return MonotoneReport(min_pairing=min_pairing, worst_pair=worst, samples=len(graph))


def min_norm_selection(A, x, space):
    """Minimal-norm element of the value set at ``x``.

    Raises :class:`NoSelectionError` outside the domain.
    """
    value = A.evaluate(_vec(x, A.n))
    if value.is_empty:
        raise NoSelectionError(f"point {np.asarray(x).tolist()} is outside the domain")
    return min_norm_point(value, space).point


# ----------------------------------------------------------------------
# Regularized resolvent
# ----------------------------------------------------------------------


class ResolventResult(NamedTuple):
    """Solution of 0 in (1/lam) J(y - x) + A(y).

    ``zstar`` is J(x - y), so that zstar / lam belongs to A(y); the
    residual is the dual-norm distance from zstar / lam to the value set.
    """

    x_lambda: np.ndarray
    zstar: np.ndarray
    residual: float


def _power_grad(z, r):
    norm = np.linalg.norm(z, ord=r)
    if norm == 0.0:
        return np.zeros_like(z)
    return norm ** (2.0 - r) * np.abs(z) ** (r - 1.0) * np.sign(z)


def _assignments(subdiffs, cones):
    """All candidate active-set assignments, smallest combined size first."""
    piece_sets = []
    for sd in subdiffs:
        k = len(sd.slopes)
        piece_sets.append(
            [s for size in range(1, k + 1) for s in itertools.combinations(range(k), size)]
        )
    row_sets = []
    for cn in cones:
        m = cn.polytope.num_rows
        row_sets.append(
            [s for size in range(0, m + 1) for s in itertools.combinations(range(m), size)]
        )
    combos = list(itertools.product(*piece_sets, *row_sets)) if (piece_sets or row_sets) else [()]
    ks = len(piece_sets)

    def total_size(combo):
        return sum(len(s) for s in combo)

    combos.sort(key=lambda c: (total_size(c), c))
    return [(c[:ks], c[ks:]) for c in combos]


def resolvent_solve(A, x, lam, space, tol=RESOLVENT_TOL):
    """Solve the regularized inclusion at base point ``x`` and parameter ``lam``.

    Enumerates active-set assignments over the polyhedral parts; each
    assignment produces a square system solved exactly (affine case) or by
    a Newton-type root finder.  A candidate is accepted when it is
    feasible and the dual element it implies lies within ``tol`` of the
    value set in the dual norm.

    Returns
    -------
    ResolventResult

    Raises
    ------
    SolverFailError
        If no assignment produces a certified solution; the best residual
        reached is attached.
    """
    if lam <= 0.0 or not math.isfinite(lam):
        raise InputError(f"lam must be positive and finite, got {lam!r}")
    n = A.n
    if space.n != n:
        raise DimensionMismatchError("space dimension does not match the operator")
    x = _vec(x, n)
    p = space.p
    flat = flatten_operator(A)
    affine = _smooth_affine_data(flat.smooths, p, n)
    linear_path = abs(p - 2.0) < 1e-12 and affine is not None

    best_residual = math.inf
    for piece_sub, row_sub in _assignments(flat.subdiffs, flat.cones):
        out = _solve_assignment(
            flat, piece_sub, row_sub, x, lam, space, affine if linear_path else None
        )
        if out is None:
            continue
        y = out
        # certificate: the implied dual element must lie in the value set
        w = _power_grad(x - y, p) / lam
        value = A.evaluate(y)
        if value.is_empty:
            continue
        residual = set_dual_distance(value, w, space)
        best_residual = min(best_residual, residual)
        if residual <= tol:
            zstar = _power_grad(x - y, p)
            return ResolventResult(x_lambda=y, zstar=zstar, residual=residual)
    raise SolverFailError("resolvent enumeration found no certified solution", residual=best_residual)


def _solve_assignment(flat, piece_sub, row_sub, x, lam, space, affine):
    """Solve one active-set assignment; return y or None when infeasible."""
    n = len(x)
    p = space.p
    subdiffs, cones, smooths = flat
    sizes_theta = [len(s) for s in piece_sub]
    sizes_mu = [len(s) for s in row_sub]
    K = len(subdiffs)
    dim = n + sum(sizes_theta) + sum(sizes_mu) + K

    def unpack(u):
        y = u[:n]
        off = n
        thetas = []
        for sz in sizes_theta:
            thetas.append(u[off : off + sz])
            off += sz
        mus = []
        for sz in sizes_mu:
            mus.append(u[off : off + sz])
            off += sz
        ms = u[off : off + K]
        return y, thetas, mus, ms

    def residual_fn(u):
        y, thetas, mus, ms = unpack(u)
        r = np.empty(dim)
        acc = _power_grad(y - x, p) / lam + _smooth_value(smooths, y)
        for sd, sub, th in zip(subdiffs, piece_sub, thetas):
            acc = acc + sd.slopes[list(sub)].T @ th
        for cn, sub, mu in zip(cones, row_sub, mus):
            if len(sub):
                acc = acc + cn.polytope.normals[list(sub)].T @ mu
        r[:n] = acc
        off = n
        for sd, sub, m_k in zip(subdiffs, piece_sub, ms):
            rows = sd.slopes[list(sub)] @ y + sd.intercepts[list(sub)] - m_k
            r[off : off + len(sub)] = rows
            off += len(sub)
        for cn, sub in zip(cones, row_sub):
            if len(sub):
                r[off : off + len(sub)] = (
                    cn.polytope.normals[list(sub)] @ y - cn.polytope.offsets[list(sub)]
                )
            off += len(sub)
        for j, th in enumerate(thetas):
            r[off + j] = th.sum() - 1.0
        return r

    if affine is not None:
        M_s, b_s = affine
        Amat = np.zeros((dim, dim))
        rhs = np.zeros(dim)
        # gradient block: (1/lam)(y - x) + M_s y + b_s + combo terms = 0
        Amat[:n, :n] = np.eye(n) / lam + M_s
        rhs[:n] = x / lam - b_s
        off = n
        for sd, sub in zip(subdiffs, piece_sub):
            S = sd.slopes[list(sub)]
            Amat[:n, off : off + len(sub)] = S.T
            Amat[off : off + len(sub), :n] = S
            rhs[off : off + len(sub)] = -sd.intercepts[list(sub)]
            off += len(sub)
        for cn, sub in zip(cones, row_sub):
            if len(sub):
                R = cn.polytope.normals[list(sub)]
                Amat[:n, off : off + len(sub)] = R.T
                Amat[off : off + len(sub), :n] = R
                rhs[off : off + len(sub)] = cn.polytope.offsets[list(sub)]
            off += len(sub)
        m_off = off
        # activity rows carry a -1 coefficient on the part's max value
        col = m_off
        row = n
        for sub in piece_sub:
            Amat[row : row + len(sub), col] = -1.0
            row += len(sub)
            col += 1
        # sum-to-one rows for each subdiff part
        col = n
        for j, sz in enumerate(sizes_theta):
            Amat[m_off + j, col : col + sz] = 1.0
            rhs[m_off + j] = 1.0
            col += sz
        sol, *_ = np.linalg.lstsq(Amat, rhs, rcond=None)
        if np.max(np.abs(Amat @ sol - rhs)) > 1e-9:
            return None
        u = sol
    else:
        u0 = np.zeros(dim)
        u0[:n] = x
        off = n
        for sz in sizes_theta:
            u0[off : off + sz] = 1.0 / sz
            off += sz
        off += sum(sizes_mu)
        for j, sd in enumerate(subdiffs):
            u0[off + j] = sd.function_value(x)
        sol = root(residual_fn, u0, method="hybr", tol=1e-13)
        if not sol.success or np.max(np.abs(residual_fn(sol.x))) > 1e-8:
            sol = root(residual_fn, u0, method="lm")
            if np.max(np.abs(residual_fn(sol.x))) > 1e-8:
                return None
        u = sol.x

    y, thetas, mus, ms = unpack(u)
    if not np.all(np.isfinite(y)):
        return None
    # feasibility of multipliers
    for th in thetas:
        if len(th) and float(np.min(th)) < -1e-8:
            return None
    for mu in mus:
        if len(mu) and float(np.min(mu)) < -1e-8:
            return None
    # inactive pieces must not exceed the active value
    for sd, sub, m_k in zip(subdiffs, piece_sub, ms):
        others = [i for i in range(len(sd.slopes)) if i not in sub]
        if others:
            vals = sd.slopes[others] @ y + sd.intercepts[others]
            if float(np.max(vals)) > m_k + 1e-8 * max(1.0, abs(m_k)):
                return None
    # inactive rows must stay feasible
    for cn, sub in zip(cones, row_sub):
        others = [i for i in range(cn.polytope.num_rows) if i not in sub]
        if others:
            slack = cn.polytope.offsets[others] - cn.polytope.normals[others] @ y
            scale = np.maximum(1.0, np.abs(cn.polytope.offsets[others]))
            if float(np.min(slack / scale)) < -1e-8:
                return None
    return y


# ----------------------------------------------------------------------
# Trajectories
# ----------------------------------------------------------------------


def default_lambda_schedule():
    """The default decreasing schedule 2**-k, k = 1..20."""
    return [2.0 ** -k for k in range(1, 21)]


@dataclass(frozen=True)
class TrajectoryRecord:
    """One resolvent step of a trajectory."""

    lam: float
    x_lambda: np.ndarray
    zstar: np.ndarray
    yosida: np.ndarray
    step_norm: float
    yosida_norm: float
    residual: float
    bound_rhs: float
    bound_ok: bool


@dataclass(frozen=True)
class Trajectory:
    """Resolvent trajectory toward the minimal-norm selection at ``x``."""

    x: np.ndarray
    limit_selection: np.ndarray
    limit_norm: float
    records: tuple
    terminal_gap: float
    converged: bool


def _step_bound(lam, sel_norm):
    """Per-step norm bound for lam < 1 derived from monotonicity."""
    c = 1.0 - lam ** 3
    return (sel_norm + math.sqrt(sel_norm ** 2 + 4.0 * lam * c)) / (2.0 * c)


def yosida_trajectory(A, x, space, schedule=None, tol_traj=1e-3, strict=True):
    """Resolvent trajectory along a decreasing lambda schedule.

    For each lambda the regularized inclusion is solved at the fixed base
    point; the induced dual elements ``zstar / lam`` are recorded together
    with the per-step norm bound

        ||x - x_lam|| / lam <= (s + sqrt(s^2 + 4 lam (1 - lam^3))) / (2 (1 - lam^3))

    with s the dual norm of the minimal selection (checked for lam < 1).
    Terminal convergence requires the last dual element to be within
    ``tol_traj`` of the minimal-norm selection.

    Parameters
    ----------
    A : OperatorSpec
    x : array_like
        Base point; must belong to the domain.
    space : NormedSpace
    schedule : sequence of float, optional
        Strictly decreasing positive values; defaults to 2**-k, k=1..20.
    tol_traj : float
        Terminal tolerance in the dual norm.
    strict : bool
        When true, bound violations or terminal failure raise
        :class:`SolverFailError`; otherwise they are only recorded.
    """
    x = _vec(x, A.n)
    if schedule is None:
        schedule = default_lambda_schedule()
    schedule = [float(l) for l in schedule]
    if any(l <= 0.0 for l in schedule) or any(
        a <= b for a, b in zip(schedule, schedule[1:])
    ):
        raise InputError("schedule must be strictly decreasing and positive")
    selection = min_norm_selection(A, x, space)
    sel_norm = float(np.linalg.norm(selection, ord=space.q))
    records = []
    for lam in schedule:
        res = resolvent_solve(A, x, lam, space)
        step_norm = float(np.linalg.norm(x - res.x_lambda, ord=space.p))
        yosida = res.zstar / lam
        ynorm = float(np.linalg.norm(yosida, ord=space.q))
        if lam < 1.0:
            rhs = _step_bound(lam, sel_norm)
            ok = step_norm / lam <= rhs + TRAJ_BOUND_SLACK
        else:
            rhs = math.inf
            ok = True
        records.append(
            TrajectoryRecord(
                lam=lam,
                x_lambda=res.x_lambda,
                zstar=res.zstar,
                yosida=yosida,
                step_norm=step_norm,
                yosida_norm=ynorm,
                residual=res.residual,
                bound_rhs=rhs,
                bound_ok=ok,
            )
        )
        if strict and not ok:
            raise SolverFailError(
                f"trajectory bound violated at lam={lam}: {step_norm / lam:.6e} > {rhs:.6e}"
            )
    terminal_gap = float(
        np.linalg.norm(records[-1].yosida - selection, ord=space.q)
    )
    converged = terminal_gap <= tol_traj
    if strict and not converged:
        raise SolverFailError(
            f"trajectory failed to converge: terminal gap {terminal_gap:.3e} > {tol_traj}"
        )
    return Trajectory(
        x=x,
        limit_selection=selection,
        limit_norm=sel_norm,
        records=tuple(records),
        terminal_gap=terminal_gap,
        converged=converged,
    )
