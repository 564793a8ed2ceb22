"""Norm geometry of finite-dimensional l^p spaces, 1 < p < inf.

The ambient space is R^n with the l^p norm; its dual carries the l^q norm,
1/p + 1/q = 1, and dual vectors are identified with R^n through the standard
pairing.  The module provides the norms, the duality mapping (gradient of the
half squared norm) and its inverse, the eps-subdifferential of the half
squared norm decided through the Fenchel gap, and a sampling probe for strict
convexity of the unit ball.

All vectors are 1-d float arrays.  Inputs are validated: non-finite entries
and dimension mismatches raise immediately rather than propagating NaNs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DimensionMismatchError, InputError

__all__ = [
    "NormedSpace",
    "ConvexityProbe",
]

# Relative slack for exact-membership comparisons; scaled by the magnitudes
# involved so that boundary cases within a few ulps resolve consistently.
MEMBERSHIP_RTOL = 1e-12

# Hard cap for the bracketing phase of the eps-subgradient line search.
_MAX_BRACKET_DOUBLINGS = 200


def _as_vector(x, n, name="x"):
    """Validate and return a finite 1-d float array of length n."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise DimensionMismatchError(
            f"{name}: expected a vector of length {n}, got shape {arr.shape}"
        )
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name}: entries must be finite")
    return arr


def _power_map(z, r):
    """Signed power map z_k -> |z_k|**(r-1) * sign(z_k), scaled to norm ||z||_r.

    This is the gradient of (1/2)||.||_r**2 at z, equal to
    ||z||_r**(2-r) * |z_k|**(r-1) * sign(z_k), with the zero vector mapped
    to zero.
    """
    norm = np.linalg.norm(z, ord=r)
    if norm == 0.0:
        return np.zeros_like(z)
    return norm ** (2.0 - r) * np.abs(z) ** (r - 1.0) * np.sign(z)


@dataclass(frozen=True)
class ConvexityProbe:
    """Result of a strict-convexity sampling probe.

    Attributes
    ----------
    min_margin : float
        Smallest observed value of 2 - ||u + v||_p over sampled pairs of
        distinct unit vectors.  Strict convexity predicts this is positive
        for every pair.
    worst_pair : tuple of ndarray
        The pair of unit vectors achieving ``min_margin``.
    trials : int
        Number of pairs tested.
    resampled : int
        Number of draws rejected because the two vectors coincided.
    """

    min_margin: float
    worst_pair: tuple
    trials: int
    resampled: int = 0


@dataclass(frozen=True)
class NormedSpace:
    """R^n equipped with the l^p norm, 1 < p < inf.

    Parameters
    ----------
    n : int
        Ambient dimension, at least 1.
    p : float
        Norm exponent, strictly between 1 and infinity.  The endpoint
        values are rejected because the geometry relies on strict
        convexity and smoothness of the norm.
    """

    n: int
    p: float

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise InputError(f"n must be a positive integer, got {self.n!r}")
        p = float(self.p)
        if not math.isfinite(p) or p <= 1.0:
            raise InputError(f"p must lie in (1, inf), got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def q(self):
        """Dual exponent, p / (p - 1)."""
        return self.p / (self.p - 1.0)

    def check_vector(self, x, name="x"):
        """Return ``x`` as a validated vector of this space."""
        return _as_vector(x, self.n, name)

    # -- norms -----------------------------------------------------------

    def norm(self, x):
        """l^p norm of a primal vector."""
        return float(np.linalg.norm(self.check_vector(x), ord=self.p))

    def dual_norm(self, xstar):
        """l^q norm of a dual vector."""
        return float(np.linalg.norm(self.check_vector(xstar, "xstar"), ord=self.q))

    # -- duality mappings ------------------------------------------------

    def duality_map(self, x):
        """Duality mapping J(x), the gradient of (1/2)||.||_p**2.

        Componentwise ``||x||_p**(2-p) |x_k|**(p-1) sign(x_k)``, with
        J(0) = 0.  The image satisfies ``<J(x), x> = ||x||_p**2`` and
        ``||J(x)||_q = ||x||_p`` exactly in real arithmetic.

        Parameters
        ----------
        x : array_like
            Primal vector.

        Returns
        -------
        ndarray
            The unique dual vector aligned with ``x``.
        """
        return _power_map(self.check_vector(x), self.p)

    def dual_duality_map(self, xstar):
        """Inverse duality mapping, the same power map with the dual exponent.

        ``dual_duality_map(duality_map(x)) == x`` up to roundoff; this is
        the duality mapping of the dual space under the identification of
        the bidual with R^n.
        """
        return _power_map(self.check_vector(xstar, "xstar"), self.q)

    # -- eps-subdifferential of the half squared norm --------------------

    def fenchel_gap(self, x, xstar):
        """Fenchel gap (1/2)||x||_p^2 + (1/2)||xstar||_q^2 - <xstar, x>.

        Nonnegative for every pair, zero exactly when ``xstar`` equals the
        duality map of ``x``.
        """
        x = self.check_vector(x)
        xstar = self.check_vector(xstar, "xstar")
        return (
            0.5 * np.linalg.norm(x, ord=self.p) ** 2
            + 0.5 * np.linalg.norm(xstar, ord=self.q) ** 2
            - float(np.dot(xstar, x))
        )

    def eps_subdiff_contains(self, x, xstar, eps):
        """Whether ``xstar`` lies in the eps-subdifferential of (1/2)||.||^2 at x.

        Decided by the Fenchel gap: membership holds iff
        ``gap(x, xstar) <= eps``.  A relative slack of about 1e-12 absorbs
        roundoff so that exact members (``xstar = J(x)``, ``eps = 0``) and
        boundary cases within a few ulps of the threshold test correctly.

        Parameters
        ----------
        x, xstar : array_like
            Primal and dual vectors.
        eps : float
            Slack parameter, must be nonnegative.
        """
        if eps < 0.0 or not math.isfinite(eps):
            raise InputError(f"eps must be finite and >= 0, got {eps!r}")
        gap = self.fenchel_gap(x, xstar)
        scale = 1.0 + 0.5 * self.norm(x) ** 2 + 0.5 * self.dual_norm(xstar) ** 2
        return bool(gap <= eps + MEMBERSHIP_RTOL * scale)

    def eps_subdiff_element(self, x, eps, direction_hint=None):
        """Construct an element of the eps-subdifferential of (1/2)||.||^2 at x.

        For ``eps == 0`` this is the duality map itself.  For positive eps
        the element is found on the dual-space ray ``J(x) + t d`` with ``d``
        the normalized hint, by solving ``gap(t) = eps`` with a bracketing
        line search; the gap at the returned point sits at the top of the
        band [0.9 eps, eps].

        Parameters
        ----------
        x : array_like
            Base point.
        eps : float
            Nonnegative slack.
        direction_hint : array_like, optional
            Dual-space direction to move along; defaults to the first
            coordinate axis.  A zero hint falls back to the default.

        Returns
        -------
        ndarray
            Dual vector whose Fenchel gap at ``x`` equals ``eps`` to
            root-finding accuracy.
        """
        x = self.check_vector(x)
        if eps < 0.0 or not math.isfinite(eps):
            raise InputError(f"eps must be finite and >= 0, got {eps!r}")
        base = self.duality_map(x)
        if eps == 0.0:
            return base

        if direction_hint is None:
            d = np.zeros(self.n)
            d[0] = 1.0
        else:
            d = self.check_vector(direction_hint, "direction_hint").copy()
            if np.linalg.norm(d) == 0.0:
                d = np.zeros(self.n)
                d[0] = 1.0
        d = d / np.linalg.norm(d, ord=self.q)

        half_xnorm2 = 0.5 * np.linalg.norm(x, ord=self.p) ** 2

        def gap_at(t):
            xs = base + t * d
            return (
                half_xnorm2
                + 0.5 * np.linalg.norm(xs, ord=self.q) ** 2
                - float(np.dot(xs, x))
            )

        # gap_at(0) == 0 and gap_at grows without bound, so the root of
        # gap_at(t) - eps brackets by doubling from the zero-base-point
        # closed form t = sqrt(2 eps).
        t_hi = math.sqrt(2.0 * eps)
        doublings = 0
        while gap_at(t_hi) < eps:
            t_hi *= 2.0
            doublings += 1
            if doublings > _MAX_BRACKET_DOUBLINGS:
                raise InputError("eps_subdiff_element: failed to bracket the gap")
        t = brentq(lambda s: gap_at(s) - eps, 0.0, t_hi, xtol=1e-15, rtol=1e-15)
        return base + t * d

    # -- strict convexity probe ------------------------------------------

    def strict_convexity_probe(self, trials=200, seed=0):
        """Sample pairs of distinct unit vectors and record 2 - ||u + v||_p.

        Strict convexity of the unit ball means the margin is positive for
        every pair of distinct unit vectors; the probe reports the smallest
        observed margin and the pair achieving it.  This is a sampling
        check, not a verification of any modulus.

        Parameters
        ----------
        trials : int
            Number of pairs to draw.
        seed : int
            Seed for the generator; identical seeds reproduce the report.

        Returns
        -------
        ConvexityProbe
        """
        if trials < 1:
            raise InputError("trials must be >= 1")
        rng = np.random.default_rng(seed)
        min_margin = math.inf
        worst = None
        resampled = 0
        for _ in range(trials):
            while True:
                u = rng.standard_normal(self.n)
                v = rng.standard_normal(self.n)
                nu = np.linalg.norm(u, ord=self.p)
                nv = np.linalg.norm(v, ord=self.p)
                if nu == 0.0 or nv == 0.0:
                    resampled += 1
                    continue
                u = u / nu
                v = v / nv
                if np.linalg.norm(u - v, ord=self.p) < 1e-12:
                    resampled += 1
                    continue
                break
            margin = 2.0 - float(np.linalg.norm(u + v, ord=self.p))
            if margin < min_margin:
                min_margin = margin
                worst = (u, v)
        return ConvexityProbe(
            min_margin=min_margin, worst_pair=worst, trials=trials, resampled=resampled
        )
