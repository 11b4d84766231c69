"""Measure builders mirroring the smoothing / slow-mass / splice steps.

These turn the existence arguments behind the oscillating-decay results
into explicit finite-precision witnesses:

  * `smooth_state`   reweights atoms by 1 - exp(-n |x-y|^rho), pushing the
    lower scaling exponent at x up to ~rho while converging to the input
    as n grows;
  * `slow_measure`   places a doubly-exponential ladder of atoms whose
    ball mass at x decays slower than any power (lower exponent -> 0);
  * `splice_state`   removes a punctured neighbourhood of x from one
    measure and injects a scaled slow ladder, so that near x the result
    scales exactly like the ladder;
  * `oscillating_measure` chains slow and fast bands so the windowed
    exponent at the center alternates between ~0 and a high target --
    the finite-precision face of "lower exponent 0, upper infinite"
    (infinity itself is unreachable: the high target grows with the
    available precision, default 3).

Scale ladders use eps_j = exp(-2**j) with j <= 9; eps_9 ~ 4e-223 is the
deepest doubly-exponential scale that stays a normal double.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .measures import AtomicMeasure, empty_measure, mix

#: deepest ladder level: exp(-2**9) is representable, exp(-2**10) is not
MAX_LADDER_LEVEL = 9

#: smallest admissible atom weight in realized plans
MIN_PLAN_WEIGHT = 1e-300

#: smallest admissible ladder scale in plans
MIN_PLAN_SCALE = 1e-280


def ladder_scale(j):
    """eps_j = exp(-2**j)."""
    return math.exp(-(2.0**j))


@dataclass(frozen=True)
class SlowSchedule:
    """Atom ladder schedule at scales eps_j = exp(-2**j), j_min..j_max.

    Weights default to 2**-j; any choice must satisfy the exact tail
    inequality sum_{k>=j} w_k >= 2**-j = 1/(-ln eps_j) for every j,
    which is what makes the ladder's ball mass decay slower than any
    power of the scale.
    """

    center: float = 0.0
    j_max: int = MAX_LADDER_LEVEL
    j_min: int = 1
    weights: tuple = None

    def __post_init__(self):
        if not 1 <= self.j_min <= self.j_max <= MAX_LADDER_LEVEL:
            raise ValidationError(
                f"need 1 <= j_min <= j_max <= {MAX_LADDER_LEVEL} (double-precision bound)"
            )
        if self.weights is None:
            object.__setattr__(
                self, "weights", tuple(2.0**-j for j in self.levels())
            )
        w = self.weights
        if len(w) != self.j_max - self.j_min + 1:
            raise ValidationError("one weight per ladder level required")
        if any(not x > 0.0 for x in w):
            raise ValidationError("ladder weights must be > 0")
        tail = 0.0
        for j, wj in zip(reversed(self.levels()), reversed(w)):
            tail += wj
            if tail < 2.0**-j:
                raise ValidationError(
                    f"tail sum {tail:g} below 2**-{j} at level {j}: ladder would "
                    "not be slow"
                )
        smallest = ladder_scale(self.j_max)
        if abs(self.center) > 0.0 and smallest <= 4.0 * np.finfo(float).eps * abs(self.center):
            raise ValidationError(
                "ladder scales are not representable at this center; use center 0"
            )

    def levels(self):
        return range(self.j_min, self.j_max + 1)

    def scales(self):
        """Strictly decreasing ladder scales eps_j."""
        return np.array([ladder_scale(j) for j in self.levels()])

    def tail_sums(self):
        """sum_{k>=j} w_k for each level j, exact over the stored floats."""
        w = np.asarray(self.weights)
        return np.cumsum(w[::-1])[::-1]

    def to_dict(self):
        return {
            "kind": "slow_schedule",
            "center": float(self.center),
            "j_min": int(self.j_min),
            "j_max": int(self.j_max),
            "weights": [float(w) for w in self.weights],
        }


def slow_measure(schedule):
    """Atoms at center + eps_j with the schedule weights.

    For eps in (eps_{j+1}, eps_j] the open ball at the center holds
    exactly the atoms deeper than level j, so its mass is the exact
    weight tail sum_{k>=j+1} w_k.
    """
    scales = schedule.scales()
    return AtomicMeasure(schedule.center + scales, np.asarray(schedule.weights))


def smooth_state(mu, x, rho, n):
    """Reweight atoms by (1 - exp(-n |x - x_j|^rho)).

    The factor lies in [0, 1): every weight shrinks, an atom exactly at
    x is dropped, and the measure converges to mu as n -> infinity.
    The smoothed Laplace transform at x obeys

        L(t) <= n * rho / (2**rho * t**rho) * total_mass(mu),

    which pins the lower scaling exponent at x to at least rho.  The
    bound's derivation majorizes exp(-2tu) u^rho by rho/(2t)**rho, which
    is valid for rho >= ~0.445 (rho**(rho-1) * exp(-rho) <= 1); for
    smaller rho only the sharp form with the extra factor
    (rho*e^-1)**rho / rho is guaranteed.

    May return a degenerate (zero-mass) measure, flagged as such.
    """
    if rho <= 0.0 or n <= 0.0:
        raise ValidationError("smooth_state requires rho > 0 and n > 0")
    if mu.is_degenerate:
        return mu
    d = np.abs(mu.positions - x)
    with np.errstate(under="ignore"):
        factor = -np.expm1(-n * d**rho)
    keep = factor > 0.0
    if not np.any(keep):
        return empty_measure()
    return AtomicMeasure(mu.positions[keep], mu.weights[keep] * factor[keep])


def smooth_laplace_bound(mu, rho, n, t):
    """The documented majorant n*rho/(2**rho t**rho) * total_mass."""
    return n * rho / (2.0**rho * t**rho) * mu.total_mass


def splice_state(mu_psi, mu_eta, n, x):
    """Remove the punctured 1/n-neighbourhood of x from mu_psi and mix in
    the ladder measure scaled by 1/n**2.

    Requires mu_eta supported strictly inside (x - 1/n, x + 1/n) and no
    mu_psi atom exactly at x; then for every eps < 1/n the open ball at
    x sees only the scaled ladder:

        ball_mass(result, x, eps) = (1/n**2) * ball_mass(mu_eta, x, eps).

    The identity is exact in floating point whenever 1/n**2 is a power
    of two (scaling by powers of two commutes with rounding); for other
    n it holds to roundoff.
    """
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise ValidationError("splice_state requires a positive integer n")
    if mu_eta.is_degenerate:
        raise ValidationError("splice_state requires a nonzero ladder measure")
    r = 1.0 / n
    reach = max(abs(mu_eta.support_min - x), abs(mu_eta.support_max - x))
    if not reach < r:
        raise ValidationError(
            f"ladder must be supported inside (x - 1/n, x + 1/n); outermost atom "
            f"at distance {reach:g} >= {r:g}; build it from slow_measure with "
            "eps_1 < 1/n"
        )
    if np.any(mu_psi.positions == x):
        raise ValidationError(
            "splice_state requires no mu_psi atom exactly at the center "
            "(the ball identity needs a continuous-at-x base measure)"
        )
    base = mu_psi.restrict([(x - r, x + r)])
    parts = [(mu_eta, 1.0 / (n * n))]
    if not base.is_degenerate:
        parts.insert(0, (base, 1.0))
    return mix(parts)


# ----------------------------------------------------------------------
# oscillating witnesses
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class OscillationPlan:
    """Alternating scale bands with target exponents at the center.

    blocks are (scale_lo, scale_hi, target_slope) ordered from the
    outermost band inwards; bands must be disjoint and decreasing and
    consecutive targets must alternate between slow (< 1) and fast
    (>= 1).  Fast bands get `atoms_per_decade` geometric atoms with
    tail-telescoped weights (tail mass tracks c * scale**s); slow bands
    get a doubly-exponential sub-ladder with halving weights.
    """

    blocks: tuple
    center: float = 0.0
    atoms_per_decade: int = 32
    mass: float = 1.0

    def __post_init__(self):
        if not self.blocks:
            raise ValidationError("plan needs at least one block", path="blocks")
        if self.atoms_per_decade < 4:
            raise ValidationError("need at least 4 atoms per decade", path="atoms_per_decade")
        if not self.mass > 0.0:
            raise ValidationError("plan mass must be > 0", path="mass")
        prev_lo = math.inf
        prev_fast = None
        for i, (lo, hi, s) in enumerate(self.blocks):
            where = f"blocks[{i}]"
            if not 0.0 < lo < hi < 1.0:
                raise ValidationError("band must satisfy 0 < lo < hi < 1", path=where)
            if lo < MIN_PLAN_SCALE:
                raise ValidationError(f"band scales must stay >= {MIN_PLAN_SCALE}", path=where)
            if hi > prev_lo:
                raise ValidationError("bands must be disjoint and decreasing", path=where)
            if s < 0.0:
                raise ValidationError("target slope must be >= 0", path=where)
            fast = s >= 1.0
            if prev_fast is not None and fast == prev_fast:
                raise ValidationError(
                    "consecutive blocks must alternate slow (< 1) and fast (>= 1) targets",
                    path=where,
                )
            prev_fast = fast
            prev_lo = lo

    def to_dict(self):
        return {
            "kind": "oscillation_plan",
            "center": float(self.center),
            "blocks": [[float(lo), float(hi), float(s)] for lo, hi, s in self.blocks],
            "atoms_per_decade": int(self.atoms_per_decade),
            "mass": float(self.mass),
        }


@dataclass(frozen=True)
class OscillationRealization:
    """A realized plan: the witness measure plus per-band bookkeeping."""

    plan: OscillationPlan
    measure: AtomicMeasure
    bands: tuple  # dicts: band, target, mass_in, mass_out, atoms


def realize_oscillation(plan):
    """Build the atom ladder for a plan; see OscillationPlan."""
    distances = []
    weights = []
    band_info = []
    m_avail = plan.mass
    for idx, (lo, hi, s) in enumerate(plan.blocks):
        if s >= 1.0:
            d, w, m_next = _fast_band(lo, hi, s, m_avail, plan.atoms_per_decade)
        else:
            d, w, m_next = _slow_band(lo, hi, m_avail)
        if w and min(w) < MIN_PLAN_WEIGHT:
            raise ValidationError(
                f"block {idx} (band [{lo:g}, {hi:g}], target {s:g}) requires weights "
                f"below {MIN_PLAN_WEIGHT}: unrealizable in double precision",
                path=f"blocks[{idx}]",
            )
        band_info.append(
            {
                "band": (lo, hi),
                "target": s,
                "mass_in": m_avail,
                "mass_out": m_next,
                "atoms": len(d),
            }
        )
        distances.extend(d)
        weights.extend(w)
        m_avail = m_next
    # remainder anchor keeps the inner tail mass exactly m_avail
    anchor = plan.blocks[-1][0] / 2.0
    distances.append(anchor)
    weights.append(m_avail)
    mu = AtomicMeasure(plan.center + np.asarray(distances), np.asarray(weights))
    return OscillationRealization(plan=plan, measure=mu, bands=tuple(band_info))


def oscillating_measure(plan):
    """The witness measure of a plan (see `realize_oscillation`)."""
    return realize_oscillation(plan).measure


def _fast_band(lo, hi, s, m_avail, atoms_per_decade):
    """Geometric atoms whose tail mass follows c * scale**s through the band."""
    decades = math.log10(hi / lo)
    steps = max(2, int(math.ceil(decades * atoms_per_decade)))
    deltas = np.geomspace(hi, lo, steps + 1)
    c = m_avail / hi**s
    w = c * (deltas[:-1] ** s - deltas[1:] ** s)
    m_next = c * lo**s
    return list(deltas[:-1]), list(w), m_next


def _slow_band(lo, hi, m_avail):
    """Doubly-exponential sub-ladder with halving weights through the band."""
    u = math.log(1.0 / hi)
    d, w = [], []
    m = m_avail
    while math.exp(-u) >= lo:
        d.append(math.exp(-u))
        m /= 2.0
        w.append(m)
        u *= 2.0
    if not d:  # band narrower than one doubling: single plateau atom
        d.append(hi)
        m /= 2.0
        w.append(m)
    return d, w, m
