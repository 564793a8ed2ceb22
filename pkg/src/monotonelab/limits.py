"""Limit-set estimation and numerical verification of representation results.

The estimators approximate the set of strong limit points of operator
values at punctured neighborhoods of a base point (the limiting cloud).
Two modes exist: a sampled mode that draws points on shrinking spheres
inside the domain and keeps dual points that recur across the finest
scales, and an exact mode (dimension at most 3) that enumerates the
directional cells of the polyhedral structure and returns exact limit
faces, including unbounded ones as tagged ray directions.

On top of the clouds sit the verification suites:

- ``verify_representation``: value set at x versus the convex hull of the
  cloud plus the domain normal cone at x, compared by support functions
  over a direction grid.
- ``verify_face_inclusion``: exposed faces of the value set must appear
  in the cloud.
- ``support_formula_estimate``: the support value of the value set in a
  direction equals the liminf of pairings with minimal selections at
  points approaching x from that direction.
- ``lower_bound_check``: the sample-wise monotonicity inequality that
  gives the easy half of the support formula.
- ``operator_equality_test``: two operators with equal domains and the
  first one's minimal selection inside the second one's values must agree
  entirely.

Outcomes are PASS, FAIL, INCONCLUSIVE, DEGENERATE_DOMAIN, or
HYPOTHESIS_VIOLATION; only FAIL indicates a broken instance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .convex_sets import (
    ConvexSet,
    direction_grid,
    face,
    facet_normals,
    minkowski_sum,
    set_distance_report,
    set_dual_distance,
    support_function,
)
from .errors import InputError
from .operators import flatten_operator, min_norm_selection

__all__ = [
    "STATUS_PASS",
    "STATUS_FAIL",
    "STATUS_INCONCLUSIVE",
    "STATUS_DEGENERATE",
    "STATUS_HYPOTHESIS",
    "LimsupCloud",
    "VerificationReport",
    "s_limsup_estimate",
    "verify_representation",
    "verify_face_inclusion",
    "support_formula_estimate",
    "lower_bound_check",
    "operator_equality_test",
    "default_radius_schedule",
    "default_t_levels",
]

STATUS_PASS = "PASS"
STATUS_FAIL = "FAIL"
STATUS_INCONCLUSIVE = "INCONCLUSIVE"
STATUS_DEGENERATE = "DEGENERATE_DOMAIN"
STATUS_HYPOTHESIS = "HYPOTHESIS_VIOLATION"

# Recurrence tolerance for limit-point clustering.
CLUSTER_TOL = 1e-6
# Allowance per unit radius for value drift of the smooth parts.
DRIFT_BUDGET = 10.0
# Symmetric support-gap tolerances for the representation check.
REP_TOL = 1e-3
REP_TOL_EXACT = 1e-6
# Face-to-cloud distance tolerances.
FACE_TOL = 1e-3
FACE_TOL_EXACT = 1e-6
# Support-formula tolerance; divergence threshold is its reciprocal.
SF_TOL = 1e-3
# Slack for the sample-wise monotone lower bound.
LOWER_BOUND_SLACK = 1e-9
# One-sided inclusion slack (hull(cloud) + cone inside the value set).
ONE_SIDED_TOL = 1e-8
# Operator-equality tolerances: selection membership, then set equality.
EQ_MEMBER_TOL = 1e-8
EQ_SET_TOL = 1e-6

_LP_METHOD = "highs"


def default_radius_schedule():
    """Decreasing sphere radii 2**-k, k = 3..12."""
    return [2.0 ** -k for k in range(3, 13)]


def default_t_levels():
    """Level indices k for the support formula: t = 2**-k, ball 2**(-k/2).

    Levels run to k = 29 so that the shrinking-ball radius 2**(-k/2)
    reaches the order of the declared tolerance and the per-level infima
    become Cauchy for catalog slopes; beyond k = 29 the scale t drops to
    the piecewise-activity resolution (1e-9) and level infima degrade,
    which the Cauchy criterion reports as INCONCLUSIVE rather than a
    false pass.
    """
    return list(range(4, 30))


def _json_scalar(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# ----------------------------------------------------------------------
# Limiting cloud
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LimsupCloud:
    """Strong limit points of operator values on punctured neighborhoods.

    ``points`` are dual-space elements certified to recur near the base
    point: each carries ``provenance`` samples (y, radius) with the point
    lying within the clustering tolerance (plus the drift allowance
    ``drift_budget * radius`` for smooth parts) of the value set at y.
    Unbounded limiting values contribute unit ``ray_tags`` instead of
    large surrogate points; only the exact mode produces tags.
    """

    points: np.ndarray
    ray_tags: np.ndarray
    provenance: tuple
    radii_schedule: tuple
    exact: bool
    affine_fallback: bool
    levels_table: tuple
    cert_max: float

    @property
    def is_empty(self):
        return self.points.shape[0] == 0

    @property
    def n(self):
        return self.points.shape[1]

    def distance_to(self, point, space):
        """Dual-norm distance from ``point`` to the nearest cloud point."""
        if self.is_empty:
            return math.inf
        diffs = self.points - np.asarray(point, dtype=float).reshape(1, -1)
        return float(np.min(np.linalg.norm(diffs, ord=space.q, axis=1)))

    def matches_ray(self, g, tol=1e-6):
        """Whether a unit ray direction appears among the tags."""
        if self.ray_tags.shape[0] == 0:
            return False
        g = np.asarray(g, dtype=float).reshape(-1)
        g = g / np.linalg.norm(g)
        return bool(np.min(np.linalg.norm(self.ray_tags - g, axis=1)) <= tol)

    def to_json(self):
        return {
            "points": [list(map(float, p)) for p in self.points],
            "ray_tags": [list(map(float, g)) for g in self.ray_tags],
            "radii_schedule": [float(r) for r in self.radii_schedule],
            "exact": bool(self.exact),
            "affine_fallback": bool(self.affine_fallback),
            "cert_max": _json_scalar(self.cert_max),
            "provenance": [
                [{"y": list(map(float, y)), "radius": float(r)} for (y, r) in per_point]
                for per_point in self.provenance
            ],
        }


def _lp_sphere_directions(rng, count, n, p):
    """Uniform directions on the unit sphere of the l^p norm.

    Coordinates with density proportional to exp(-|t|^p) normalize to the
    uniform law on the sphere; such coordinates are signed p-th roots of
    Gamma(1/p) draws.
    """
    g = rng.gamma(1.0 / p, 1.0, size=(count, n)) ** (1.0 / p)
    signs = rng.integers(0, 2, size=(count, n)) * 2 - 1
    z = g * signs
    norms = np.linalg.norm(z, ord=p, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return z / norms


def _implicit_equality_rows(domain):
    """Rows of the H-polytope that hold with equality on the whole region."""
    rows = []
    for i in range(domain.num_rows):
        a = domain.normals[i]
        b = domain.offsets[i]
        lo = -domain.support(-a)
        if math.isfinite(lo) and abs(lo - b) <= 1e-9 * max(1.0, abs(b)):
            rows.append(i)
    return rows


def _affine_hull_basis(domain):
    """Orthonormal basis of the domain's affine hull directions, or None."""
    eq = _implicit_equality_rows(domain)
    if not eq:
        return None
    E = domain.normals[eq]
    _, s, vt = np.linalg.svd(E)
    rank = int(np.sum(s > 1e-9 * (s[0] if s.size else 1.0)))
    null = vt[rank:]
    return null if null.shape[0] else np.zeros((0, domain.n))


def _sample_levels(A, x, space, radii, samples_per_radius, rng):
    """Per-radius accepted samples (y, vertices of the value set)."""
    n = A.n
    p = space.p
    pairs = max(1, samples_per_radius // 2)
    basis = None
    fallback_used = False
    levels = []
    for r in radii:
        accepted = []
        # antithetic pairs keep the directional mean at zero, so smooth
        # parts average out to their value at x
        dirs = _lp_sphere_directions(rng, pairs, n, p)
        for d in np.vstack([dirs, -dirs]):
            y = x + r * d
            if A.domain.contains(y):
                accepted.append(y)
        if not accepted:
            if basis is None:
                hull_basis = _affine_hull_basis(A.domain)
                basis = hull_basis if hull_basis is not None else np.zeros((0, n))
            if basis.shape[0]:
                fallback_used = True
                coef = rng.standard_normal((pairs, basis.shape[0]))
                cand = coef @ basis
                norms = np.linalg.norm(cand, ord=p, axis=1, keepdims=True)
                norms[norms == 0.0] = 1.0
                cand = cand / norms
                for d in np.vstack([cand, -cand]):
                    y = x + r * d
                    if A.domain.contains(y):
                        accepted.append(y)
        level_pts = []
        for y in accepted:
            val = A.evaluate(y)
            if val.is_empty:
                continue
            for vert in val.vertices:
                level_pts.append((y, vert))
        levels.append((r, level_pts))
    return levels, fallback_used


def _cluster_points(values, tol, q):
    """Single-linkage clusters of dual points at the given tolerance."""
    k = len(values)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if np.linalg.norm(values[i] - values[j], ord=q) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def s_limsup_estimate(
    A,
    x,
    space,
    radii=None,
    samples_per_radius=64,
    seed=0,
    mode="sampled",
    cluster_tol=CLUSTER_TOL,
    drift_budget=DRIFT_BUDGET,
):
    """Estimate the limiting cloud of operator values around ``x``.

    Sampled mode draws points on domain-intersected spheres of shrinking
    radius and keeps dual vertices that recur, within the clustering
    tolerance plus a drift allowance proportional to the radius, on the
    finest three populated scales; each survivor's value is averaged over
    its finest-scale cluster.  When a sphere misses the domain entirely
    (lower-dimensional domains), sampling falls back to the domain's
    affine hull and the cloud records that.

    Exact mode (dimension at most 3) enumerates directional cells of the
    polyhedral parts: each candidate activity pattern is realized by a
    direction found through a margin feasibility program, verified by
    evaluating the operator along the ray, and contributes its exact
    limiting face; unbounded faces contribute unit ray tags.

    Returns
    -------
    LimsupCloud
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != A.n:
        raise InputError(f"base point has length {x.shape[0]}, expected {A.n}")
    if space.n != A.n:
        raise InputError("space dimension does not match the operator")
    if mode not in ("sampled", "exact"):
        raise InputError(f"unknown cloud mode {mode!r}")
    if mode == "exact":
        return _s_limsup_exact(A, x, space)
    radii = default_radius_schedule() if radii is None else [float(r) for r in radii]
    if any(a <= b for a, b in zip(radii, radii[1:])) or any(r <= 0 for r in radii):
        raise InputError("radii must be strictly decreasing and positive")
    rng = np.random.default_rng(seed)
    levels, fallback = _sample_levels(A, x, space, radii, samples_per_radius, rng)
    q = space.q
    populated = [(r, pts) for r, pts in levels if pts]
    table = tuple((i, float(r), float(len(pts)), 0.0) for i, (r, pts) in enumerate(levels))
    if not populated:
        return LimsupCloud(
            points=np.zeros((0, A.n)),
            ray_tags=np.zeros((0, A.n)),
            provenance=(),
            radii_schedule=tuple(radii),
            exact=False,
            affine_fallback=fallback,
            levels_table=table,
            cert_max=0.0,
        )
    fine = populated[-min(3, len(populated)) :]
    r_finest, finest_pts = fine[-1]
    finest_values = [v for (_, v) in finest_pts]
    clusters = _cluster_points(finest_values, cluster_tol + drift_budget * r_finest, q)
    points = []
    provenance = []
    cert_max = 0.0
    for group in sorted(clusters, key=lambda g: tuple(finest_values[g[0]])):
        center = np.mean([finest_values[i] for i in group], axis=0)
        prov = []
        ok = True
        for r, pts in fine:
            tol_r = cluster_tol + drift_budget * r
            dists = [np.linalg.norm(center - v, ord=q) for (_, v) in pts]
            best = int(np.argmin(dists))
            if dists[best] > tol_r:
                ok = False
                break
            cert_max = max(cert_max, float(dists[best]))
            prov.append((tuple(map(float, pts[best][0])), float(r)))
        if ok:
            points.append(center)
            provenance.append(tuple(prov))
    pts_arr = np.asarray(points) if points else np.zeros((0, A.n))
    return LimsupCloud(
        points=pts_arr,
        ray_tags=np.zeros((0, A.n)),
        provenance=tuple(provenance),
        radii_schedule=tuple(radii),
        exact=False,
        affine_fallback=fallback,
        levels_table=table,
        cert_max=cert_max,
    )


# ----------------------------------------------------------------------
# Exact directional-cell enumeration
# ----------------------------------------------------------------------


def _cell_direction(eq_rows, ineq_rows, n):
    """A direction satisfying <e, d> = 0 and <a, d> <= -1, or None.

    With no inequality rows the margin cannot pin the scale, so a nonzero
    direction must come from the nullspace of the equality rows.
    """
    if not ineq_rows:
        if not eq_rows:
            d = np.zeros(n)
            d[0] = 1.0
            return d
        E = np.asarray(eq_rows)
        _, s, vt = np.linalg.svd(E)
        rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
        if rank >= n:
            return None
        return vt[rank]
    A_ub = np.asarray(ineq_rows)
    b_ub = -np.ones(len(ineq_rows))
    A_eq = np.asarray(eq_rows) if eq_rows else None
    b_eq = np.zeros(len(eq_rows)) if eq_rows else None
    res = linprog(
        np.zeros(n),
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(None, None)] * n,
        method=_LP_METHOD,
    )
    if res.status != 0:
        return None
    return res.x


def _verify_cell_actives(flat, x, d, t, piece_subs, row_subs):
    """Whether evaluating along x + t d reproduces the cell's activity sets."""
    y = x + t * d
    for sd, sub in zip(flat.subdiffs, piece_subs):
        if set(sd.active_pieces(y).tolist()) != set(sub):
            return False
    for cn, sub in zip(flat.cones, row_subs):
        if not cn.polytope.contains(y):
            return False
        if set(cn.polytope.active_rows(y).tolist()) != set(sub):
            return False
    return True


def _s_limsup_exact(A, x, space):
    if A.n > 3:
        raise InputError("exact cloud enumeration supports dimension at most 3")
    n = A.n
    flat = flatten_operator(A)
    smooth_total = np.zeros(n)
    for s in flat.smooths:
        smooth_total = smooth_total + s.value(x)
    sub_active = [sd.active_pieces(x) for sd in flat.subdiffs]
    cone_active = []
    for cn in flat.cones:
        if not cn.polytope.contains(x):
            raise InputError("base point must lie in the domain for exact clouds")
        cone_active.append(cn.polytope.active_rows(x))

    piece_choices = [
        [list(s) for size in range(1, len(act) + 1) for s in itertools.combinations(act.tolist(), size)]
        for act in sub_active
    ]
    row_choices = [
        [list(s) for size in range(0, len(act) + 1) for s in itertools.combinations(act.tolist(), size)]
        for act in cone_active
    ]
    points = []
    tags = []
    provenance = []
    radii = []
    cells_realized = 0
    combos = itertools.product(*piece_choices, *row_choices) if (piece_choices or row_choices) else [()]
    ks = len(piece_choices)
    for combo in combos:
        piece_subs = combo[:ks]
        row_subs = combo[ks:]
        eq_rows, ineq_rows = [], []
        for sd, act, sub in zip(flat.subdiffs, sub_active, piece_subs):
            base = sd.slopes[sub[0]]
            for i in sub[1:]:
                eq_rows.append(sd.slopes[i] - base)
            for l in act.tolist():
                if l not in sub:
                    ineq_rows.append(sd.slopes[l] - base)
        for cn, act, sub in zip(flat.cones, cone_active, row_subs):
            for j in sub:
                eq_rows.append(cn.polytope.normals[j])
            for l in act.tolist():
                if l not in sub:
                    ineq_rows.append(cn.polytope.normals[l])
        d = _cell_direction(eq_rows, ineq_rows, n)
        if d is None:
            continue
        d = d / np.linalg.norm(d)
        t_safe = None
        for t in (1e-4, 1e-2, 1e-6):
            if _verify_cell_actives(flat, x, d, t, piece_subs, row_subs) and _verify_cell_actives(
                flat, x, d, t / 512.0, piece_subs, row_subs
            ):
                t_safe = t
                break
        if t_safe is None:
            continue
        cells_realized += 1
        cell_val = ConvexSet.singleton(smooth_total)
        for sd, sub in zip(flat.subdiffs, piece_subs):
            cell_val = minkowski_sum(cell_val, ConvexSet.make(sd.slopes[sub], n=n))
        for cn, sub in zip(flat.cones, row_subs):
            gens = cn.polytope.normals[sub] if sub else np.zeros((0, n))
            cell_val = minkowski_sum(
                cell_val, ConvexSet.make(np.zeros((1, n)), gens, n=n)
            )
        cell_radii = [t_safe / 2.0 ** j for j in range(10)]
        prov = tuple((tuple(map(float, x + r * d)), float(r)) for r in cell_radii)
        radii = cell_radii if not radii or cell_radii[0] > radii[0] else radii
        for vert in cell_val.vertices:
            points.append((vert, prov))
        for g in cell_val.generators:
            tags.append(g / np.linalg.norm(g))
    # dedupe points, keeping one provenance chain each
    uniq_pts, uniq_prov = [], []
    for vert, prov in points:
        if not any(np.linalg.norm(vert - u, ord=space.q) <= 1e-9 for u in uniq_pts):
            uniq_pts.append(vert)
            uniq_prov.append(prov)
    uniq_tags = []
    for g in tags:
        if not any(np.linalg.norm(g - u) <= 1e-9 for u in uniq_tags):
            uniq_tags.append(g)
    order = sorted(range(len(uniq_pts)), key=lambda i: tuple(uniq_pts[i]))
    pts_arr = np.asarray([uniq_pts[i] for i in order]) if uniq_pts else np.zeros((0, n))
    prov_tuple = tuple(uniq_prov[i] for i in order)
    tags_arr = (
        np.asarray(sorted(uniq_tags, key=tuple)) if uniq_tags else np.zeros((0, n))
    )
    return LimsupCloud(
        points=pts_arr,
        ray_tags=tags_arr,
        provenance=prov_tuple,
        radii_schedule=tuple(radii) if radii else (),
        exact=True,
        affine_fallback=False,
        levels_table=((0, 0.0, float(cells_realized), 0.0),),
        cert_max=0.0,
    )


# ----------------------------------------------------------------------
# Verification report
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of one theorem-instance verification.

    ``max_gap`` is the governing scalar for the pass decision at the
    stated ``tolerance``; ``per_direction`` carries support gaps when a
    direction grid was used; ``convergence_table`` rows are
    (level, t_or_radius, value, gap) and feed the CSV export.
    """

    theorem_id: str
    status: str
    max_gap: float
    tolerance: float
    direction_grid_size: int = 0
    per_direction: tuple = ()
    convergence_table: tuple = ()
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        gaps = list(self.per_direction) + [self.max_gap] + [
            row[3] for row in self.convergence_table
        ]
        if any(isinstance(g, float) and math.isnan(g) for g in gaps):
            raise InputError("verification gaps must not be NaN")

    @property
    def passed(self):
        return self.status == STATUS_PASS

    def to_json(self):
        return {
            "theorem_id": self.theorem_id,
            "status": self.status,
            "max_gap": _json_scalar(self.max_gap),
            "tolerance": float(self.tolerance),
            "direction_grid_size": int(self.direction_grid_size),
            "per_direction": [_json_scalar(g) for g in self.per_direction],
            "convergence_table": [
                [int(l), _json_scalar(t), _json_scalar(v), _json_scalar(g)]
                for (l, t, v, g) in self.convergence_table
            ],
            "details": self.details,
        }


def _domain_normal_gens(domain, x):
    active = domain.active_rows(x)
    return domain.normals[active] if len(active) else np.zeros((0, domain.n))


def _default_grid(n, *sets, seed=0):
    parts = [direction_grid(n, seed=seed)]
    for s in sets:
        if not s.is_empty:
            fn = facet_normals(s)
            if fn.shape[0]:
                parts.append(fn)
    return np.vstack(parts)


def _one_sided_excess(inner, outer, directions):
    """Max support excess of ``inner`` over ``outer`` (inclusion failure)."""
    worst = 0.0
    for v in directions:
        si = support_function(inner, v)
        so = support_function(outer, v)
        if math.isinf(si) and not math.isinf(so):
            return math.inf
        if math.isfinite(si) and math.isfinite(so):
            worst = max(worst, si - so)
    return worst


# ----------------------------------------------------------------------
# Representation: value set = hull(cloud) + domain normal cone
# ----------------------------------------------------------------------


def verify_representation(
    A,
    x,
    space,
    grid=None,
    exact=False,
    seed=0,
    rep_tol=None,
    radii=None,
    samples_per_radius=64,
):
    """Check the limiting representation of the value set at ``x``.

    Builds the right-hand side from the estimated cloud: convex hull of
    the cloud points, plus the cone spanned jointly by the active domain
    normals at ``x`` and the cloud's ray tags.  Support functions of both
    sides are compared over the direction grid; the symmetric gap decides
    PASS against the mode's tolerance, and directions where exactly one
    side is unbounded fail outright.

    An empty cloud (no punctured neighborhood inside the domain) cannot
    witness limits; the check then degenerates to consistency of the
    value set with minimal selection plus normal cone and reports
    DEGENERATE_DOMAIN instead of a vacuous pass.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    lhs = A.evaluate(x)
    if lhs.is_empty:
        raise InputError("base point must lie in the operator domain")
    tol = rep_tol if rep_tol is not None else (REP_TOL_EXACT if exact else REP_TOL)
    cloud = s_limsup_estimate(
        A,
        x,
        space,
        radii=radii,
        samples_per_radius=samples_per_radius,
        seed=seed,
        mode="exact" if exact else "sampled",
    )
    ncone_gens = _domain_normal_gens(A.domain, x)
    if cloud.is_empty:
        selection = min_norm_selection(A, x, space)
        rhs = ConvexSet.make(selection.reshape(1, -1), ncone_gens, n=A.n)
        directions = _default_grid(A.n, lhs, rhs, seed=seed) if grid is None else np.asarray(grid)
        rep = set_distance_report(lhs, rhs, directions)
        consistent = not rep.mismatched and rep.max_gap <= tol
        status = STATUS_DEGENERATE if consistent else STATUS_FAIL
        return VerificationReport(
            theorem_id="representation",
            status=status,
            max_gap=rep.max_gap,
            tolerance=tol,
            direction_grid_size=len(directions),
            per_direction=tuple(float(g) for g in rep.per_direction),
            convergence_table=tuple(cloud.levels_table),
            details={
                "degenerate_domain": True,
                "cloud_empty": True,
                "mismatched_directions": len(rep.mismatched),
                "affine_fallback": cloud.affine_fallback,
            },
        )
    gens = np.vstack([ncone_gens, cloud.ray_tags]) if cloud.ray_tags.size else ncone_gens
    rhs = ConvexSet.make(cloud.points, gens, n=A.n)
    directions = _default_grid(A.n, lhs, rhs, seed=seed) if grid is None else np.asarray(grid)
    rep = set_distance_report(lhs, rhs, directions)
    one_sided = _one_sided_excess(rhs, lhs, directions)
    status = STATUS_PASS
    if rep.mismatched or rep.max_gap > tol:
        status = STATUS_FAIL
    if exact and one_sided > ONE_SIDED_TOL:
        status = STATUS_FAIL
    table = list(cloud.levels_table)
    return VerificationReport(
        theorem_id="representation",
        status=status,
        max_gap=rep.max_gap,
        tolerance=tol,
        direction_grid_size=len(directions),
        per_direction=tuple(float(g) for g in rep.per_direction),
        convergence_table=tuple(table),
        details={
            "one_sided_excess": _json_scalar(one_sided),
            "cloud_points": int(cloud.points.shape[0]),
            "cloud_rays": int(cloud.ray_tags.shape[0]),
            "mismatched_directions": len(rep.mismatched),
            "exact_mode": bool(exact),
            "affine_fallback": cloud.affine_fallback,
            "cloud_cert_max": _json_scalar(cloud.cert_max),
        },
    )


# ----------------------------------------------------------------------
# Face inclusion
# ----------------------------------------------------------------------


def verify_face_inclusion(
    A,
    x,
    v,
    space,
    exact=False,
    seed=0,
    face_tol=None,
    radii=None,
    samples_per_radius=64,
):
    """Check that the exposed face of the value set appears in the cloud.

    Every vertex of the face of the value set in direction ``v`` must lie
    within the tolerance of a cloud point (dual-norm distance).  Faces
    with recession directions additionally need each generator matched by
    a cloud ray tag; sampled clouds carry no tags, so an unmatched
    generator there downgrades the outcome to INCONCLUSIVE rather than
    FAIL, with the vertex part still decided.

    In exact mode the report records, per face vertex, the witness ray
    (radius, direction) pairs from the matched cloud point's provenance
    together with the duality-map continuity gap along the witness
    direction; this is diagnostic only.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    val = A.evaluate(x)
    if val.is_empty:
        raise InputError("base point must lie in the operator domain")
    F = face(val, v)
    tol = face_tol if face_tol is not None else (FACE_TOL_EXACT if exact else FACE_TOL)
    cloud = s_limsup_estimate(
        A,
        x,
        space,
        radii=radii,
        samples_per_radius=samples_per_radius,
        seed=seed,
        mode="exact" if exact else "sampled",
    )
    if cloud.is_empty:
        return VerificationReport(
            theorem_id="face_inclusion",
            status=STATUS_DEGENERATE,
            max_gap=math.inf,
            tolerance=tol,
            convergence_table=tuple(cloud.levels_table),
            details={"cloud_empty": True, "affine_fallback": cloud.affine_fallback},
        )
    vert_dists = [cloud.distance_to(f, space) for f in F.vertices]
    max_dist = float(max(vert_dists)) if vert_dists else 0.0
    gen_matched = [bool(cloud.matches_ray(g)) for g in F.generators]
    rays_ok = all(gen_matched) if len(gen_matched) else True
    vertices_ok = max_dist <= tol
    if not vertices_ok:
        status = STATUS_FAIL
    elif rays_ok:
        status = STATUS_PASS
    else:
        # generators unmatched: sampled clouds cannot represent rays
        status = STATUS_INCONCLUSIVE if not cloud.exact else STATUS_FAIL
    details = {
        "face_vertices": int(F.vertices.shape[0]),
        "face_generators": int(F.generators.shape[0]),
        "generators_matched": gen_matched,
        "vertex_distances": [_json_scalar(d) for d in vert_dists],
        "exact_mode": bool(cloud.exact),
    }
    if cloud.exact and not cloud.is_empty and F.vertices.shape[0]:
        vhat = v / space.norm(v)
        jv = space.duality_map(vhat)
        witnesses = []
        for f, dist in zip(F.vertices, vert_dists):
            diffs = np.linalg.norm(cloud.points - f, ord=space.q, axis=1)
            prov = cloud.provenance[int(np.argmin(diffs))]
            y_last, r_last = prov[-1]
            w_last = (np.asarray(y_last) - x) / r_last
            j_gap = float(space.dual_norm(space.duality_map(w_last) - jv))
            witnesses.append(
                {
                    "vertex": list(map(float, f)),
                    "scales": [float(r) for (_, r) in prov],
                    "direction": list(map(float, w_last)),
                    "j_continuity_gap": _json_scalar(j_gap),
                }
            )
        details["witnesses"] = witnesses
    table = list(cloud.levels_table)
    for i, d in enumerate(vert_dists):
        table.append((len(table) + i, 0.0, float(d), float(max(0.0, d - tol))))
    return VerificationReport(
        theorem_id="face_inclusion",
        status=status,
        max_gap=max_dist,
        tolerance=tol,
        convergence_table=tuple(table),
        details=details,
    )


# ----------------------------------------------------------------------
# Support-function formula
# ----------------------------------------------------------------------


def _ball_samples(rng, center, radius, count, p):
    """Uniform draws from the l^p ball around ``center`` by rejection."""
    n = len(center)
    out = []
    tries = 0
    while len(out) < count and tries < 200 * count:
        z = rng.uniform(-radius, radius, size=n)
        tries += 1
        if np.linalg.norm(z, ord=p) <= radius:
            out.append(center + z)
    return out


def support_formula_estimate(
    A,
    x,
    v,
    space,
    t_levels=None,
    w_budget=32,
    seed=0,
    sf_tol=SF_TOL,
):
    """Estimate the directional liminf of minimal-selection pairings.

    Per level k the scheme samples directions w in the l^p ball of radius
    2**(-k/2) around ``v`` (always including v itself), evaluates the
    pairing of w with the minimal-norm selection at x + 2**(-k) w, treats
    points outside the domain as +inf, and records the level infimum.
    The estimate is the final infimum once the last three levels are
    Cauchy within a tenth of the tolerance; infima staying above the
    reciprocal tolerance certify divergence, matching an infinite support
    value.

    Outcomes: PASS when the estimate matches the support value of the
    value set at ``x`` in direction ``v`` (finite case within ``sf_tol``,
    infinite case by divergence); FAIL on a certified mismatch;
    INCONCLUSIVE when neither convergence nor divergence is certified,
    including the case of a sampler that never reaches the domain while
    the support value is finite.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    if float(np.linalg.norm(v)) == 0.0:
        raise InputError("direction must be nonzero")
    val = A.evaluate(x)
    if val.is_empty:
        raise InputError("base point must lie in the operator domain")
    sigma = support_function(val, v)
    ks = default_t_levels() if t_levels is None else [int(k) for k in t_levels]
    rng = np.random.default_rng(seed)
    infima = []
    table = []
    skipped = []
    n = x.shape[0]
    for k in ks:
        t = 2.0 ** -k
        delta = 2.0 ** (-k / 2.0)
        # deterministic probes: the center and the axis extremes of the
        # ball, where piecewise-linear level infima are attained
        probes = [v]
        for i in range(n):
            e = np.zeros(n)
            e[i] = delta
            probes.extend([v + e, v - e])
        ws = probes + _ball_samples(rng, v, delta, max(0, w_budget - len(probes)), space.p)
        level_inf = math.inf
        any_in = False
        for w in ws:
            y = x + t * w
            if A.in_domain(y):
                any_in = True
                sel = min_norm_selection(A, y, space)
                level_inf = min(level_inf, float(sel @ w))
        infima.append(level_inf)
        if not any_in:
            skipped.append(k)
        if math.isinf(sigma):
            gap = 0.0 if level_inf >= 1.0 / sf_tol else math.inf
        else:
            gap = abs(level_inf - sigma) if math.isfinite(level_inf) else math.inf
        table.append((k, float(t), level_inf, gap))
    tail = infima[-3:]
    diverged = all(b >= 1.0 / sf_tol for b in tail)
    cauchy = (
        len(tail) == 3
        and all(math.isfinite(b) for b in tail)
        and abs(tail[2] - tail[1]) <= sf_tol / 10.0
        and abs(tail[1] - tail[0]) <= sf_tol / 10.0
    )
    estimate = math.inf if diverged else (infima[-1] if cauchy else math.nan)
    if math.isinf(sigma):
        status = STATUS_PASS if diverged else (STATUS_FAIL if cauchy else STATUS_INCONCLUSIVE)
        max_gap = 0.0 if diverged else (abs(infima[-1]) if cauchy else math.inf)
    else:
        if cauchy:
            max_gap = abs(estimate - sigma)
            status = STATUS_PASS if max_gap <= sf_tol else STATUS_FAIL
        elif diverged and any(math.isfinite(b) for b in infima):
            max_gap = math.inf
            status = STATUS_FAIL
        else:
            max_gap = math.inf
            status = STATUS_INCONCLUSIVE
    return VerificationReport(
        theorem_id="support_formula",
        status=status,
        max_gap=max_gap,
        tolerance=sf_tol,
        convergence_table=tuple(table),
        details={
            "support_value": _json_scalar(sigma),
            "estimate": _json_scalar(estimate) if not math.isnan(estimate) else None,
            "diverged": bool(diverged),
            "cauchy": bool(cauchy),
            "skipped_levels": skipped,
            "w_budget": int(w_budget),
        },
    )


# ----------------------------------------------------------------------
# Sample-wise monotone lower bound
# ----------------------------------------------------------------------


def lower_bound_check(A, x, v, xstar, space, samples=200, seed=0):
    """Sample-wise inequality: <x*, w> <= <A°(x + t w), w> + slack.

    The monotone half of the support formula, checked without any limit
    process: for every sampled scale t and direction w near ``v`` with
    x + t w in the domain, the pairing of any value element at ``x``
    cannot exceed the pairing of the minimal selection at the perturbed
    point.  ``xstar`` must belong to the value set at ``x``.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    v = np.asarray(v, dtype=float).reshape(-1)
    xstar = np.asarray(xstar, dtype=float).reshape(-1)
    val = A.evaluate(x)
    if val.is_empty:
        raise InputError("base point must lie in the operator domain")
    membership = set_dual_distance(val, xstar, space)
    if membership > EQ_MEMBER_TOL:
        raise InputError(
            f"xstar is not in the value set (distance {membership:.3e})"
        )
    rng = np.random.default_rng(seed)
    checked = 0
    worst = math.inf
    violations = 0
    table = []
    ks = list(range(4, 17))
    for i in range(samples):
        k = ks[i % len(ks)]
        t = 2.0 ** -k
        delta = 2.0 ** (-k / 2.0)
        if i < len(ks):
            w = v.copy()
        else:
            drawn = _ball_samples(rng, v, delta, 1, space.p)
            if not drawn:
                continue
            w = drawn[0]
        y = x + t * w
        if not A.in_domain(y):
            continue
        sel = min_norm_selection(A, y, space)
        margin = float(sel @ w) - float(xstar @ w)
        checked += 1
        worst = min(worst, margin)
        if margin < -LOWER_BOUND_SLACK:
            violations += 1
            table.append((k, float(t), margin, float(-margin)))
    if checked == 0:
        return VerificationReport(
            theorem_id="lower_bound",
            status=STATUS_INCONCLUSIVE,
            max_gap=math.inf,
            tolerance=LOWER_BOUND_SLACK,
            details={"checked": 0, "violations": 0},
        )
    status = STATUS_PASS if violations == 0 else STATUS_FAIL
    return VerificationReport(
        theorem_id="lower_bound",
        status=status,
        max_gap=float(max(0.0, -worst)),
        tolerance=LOWER_BOUND_SLACK,
        convergence_table=tuple(table),
        details={
            "checked": int(checked),
            "violations": int(violations),
            "min_margin": _json_scalar(worst),
        },
    )


# ----------------------------------------------------------------------
# Operator equality from selection membership
# ----------------------------------------------------------------------


def operator_equality_test(A1, A2, space, sample_points=None, grid=None, seed=0, samples=25):
    """Two-phase equality test driven by minimal selections.

    Phase 1 verifies the hypothesis that the first operator's minimal
    selection lies in the second operator's value set at every sample
    point; a failure is HYPOTHESIS_VIOLATION (the conclusion is not
    tested).  Phase 2 then asserts full set equality of the values at
    every sample point by support-function comparison.  Domains must
    agree as regions up front, otherwise the hypothesis is violated
    before sampling.
    """
    if A1.n != A2.n:
        return VerificationReport(
            theorem_id="operator_equality",
            status=STATUS_HYPOTHESIS,
            max_gap=math.inf,
            tolerance=EQ_MEMBER_TOL,
            details={"reason": "dimension_mismatch"},
        )
    if not A1.domain.same_region(A2.domain):
        return VerificationReport(
            theorem_id="operator_equality",
            status=STATUS_HYPOTHESIS,
            max_gap=math.inf,
            tolerance=EQ_MEMBER_TOL,
            details={"reason": "domain_mismatch"},
        )
    if sample_points is None:
        from .operators import _sample_domain_points

        rng = np.random.default_rng(seed)
        sample_points = _sample_domain_points(A1, rng, samples)
    pts = [np.asarray(p, dtype=float).reshape(-1) for p in sample_points]
    table = []
    for i, pt in enumerate(pts):
        sel = min_norm_selection(A1, pt, space)
        dist = set_dual_distance(A2.evaluate(pt), sel, space)
        table.append([i, 0.0, float(dist), 0.0])
        if dist > EQ_MEMBER_TOL:
            return VerificationReport(
                theorem_id="operator_equality",
                status=STATUS_HYPOTHESIS,
                max_gap=float(dist),
                tolerance=EQ_MEMBER_TOL,
                convergence_table=tuple(tuple(r) for r in table),
                details={
                    "reason": "selection_outside_second_value",
                    "witness_point": list(map(float, pt)),
                    "witness_selection": list(map(float, sel)),
                    "phase": 1,
                },
            )
    worst_gap = 0.0
    worst_point = None
    for i, pt in enumerate(pts):
        v1 = A1.evaluate(pt)
        v2 = A2.evaluate(pt)
        directions = (
            _default_grid(A1.n, v1, v2, seed=seed) if grid is None else np.asarray(grid)
        )
        rep = set_distance_report(v1, v2, directions)
        gap = math.inf if rep.mismatched else rep.max_gap
        table[i][3] = float(gap)
        if gap > worst_gap:
            worst_gap = gap
            worst_point = pt
    status = STATUS_PASS if worst_gap <= EQ_SET_TOL else STATUS_FAIL
    details = {"phase": 2, "points_checked": len(pts)}
    if status == STATUS_FAIL and worst_point is not None:
        details["witness_point"] = list(map(float, worst_point))
    return VerificationReport(
        theorem_id="operator_equality",
        status=status,
        max_gap=float(worst_gap),
        tolerance=EQ_SET_TOL,
        convergence_table=tuple(tuple(r) for r in table),
        details=details,
    )
