"""Finite positive Borel measures on R, represented by weighted atoms.

Every measure handled by the library is reduced to an `AtomicMeasure`:
a sorted list of (position, weight) pairs.  Continuous families are
described declaratively by `MeasureSpec` and turned into atoms with
`refine(spec, level)`; the refinement level is an explicit parameter of
every experiment, never hidden.

Conventions, fixed once for the whole library:
  * balls are open intervals B(x; eps) = (x - eps, x + eps); an atom at
    distance exactly eps is excluded;
  * zero-mass measures are representable and flagged degenerate, nothing
    downstream silently normalizes mass.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, ValidationError

# Atoms closer than this (relative to their magnitudes) are merged at
# construction so that pairwise kernels never see rounding-noise gaps.
MERGE_RTOL = 1e-15

# Default cap on the number of atoms a refinement may produce.
DEFAULT_ATOM_CAP = 2**22


class AtomicMeasure:
    """Finite weighted point set; immutable after construction.

    Positions are stored strictly increasing, duplicate positions get
    their weights added.  All queries are read-only and thread-safe.
    """

    __slots__ = ("positions", "weights", "total_mass", "_cumw")

    def __init__(self, positions, weights):
        pos = np.asarray(positions, dtype=np.float64).ravel()
        w = np.asarray(weights, dtype=np.float64).ravel()
        if pos.shape != w.shape:
            raise ValidationError("positions and weights must have equal length")
        if pos.size and not np.all(np.isfinite(pos)):
            raise ValidationError("positions must be finite")
        if w.size and (not np.all(np.isfinite(w)) or np.any(w <= 0.0)):
            raise ValidationError("weights must be finite and > 0")
        if pos.size:
            order = np.argsort(pos, kind="stable")
            pos = pos[order]
            w = w[order]
            pos, w = _merge_close(pos, w)
        self.positions = pos
        self.weights = w
        self.positions.setflags(write=False)
        self.weights.setflags(write=False)
        # cumulative weights: _cumw[i] = sum of the first i weights
        self._cumw = np.concatenate(([0.0], np.cumsum(w)))
        self._cumw.setflags(write=False)
        self.total_mass = float(self._cumw[-1])

    # -- basic queries -------------------------------------------------

    def __len__(self):
        return self.positions.size

    @property
    def is_degenerate(self):
        """True when the measure carries no mass."""
        return self.positions.size == 0

    @property
    def support_min(self):
        return float(self.positions[0])

    @property
    def support_max(self):
        return float(self.positions[-1])

    def min_gap(self):
        """Smallest distance between distinct atoms (inf if < 2 atoms)."""
        if len(self) < 2:
            return math.inf
        return float(np.min(np.diff(self.positions)))

    def ball_mass(self, x, radius):
        """Mass of the open ball (x - radius, x + radius).

        Binary search over the sorted positions, O(log n).
        """
        if radius <= 0.0:
            raise ValidationError("ball radius must be > 0")
        lo = np.searchsorted(self.positions, x - radius, side="right")
        hi = np.searchsorted(self.positions, x + radius, side="left")
        return float(self._cumw[hi] - self._cumw[lo])

    def ball_mass_many(self, centers, radius):
        """Vectorized `ball_mass` over an array of centers."""
        centers = np.asarray(centers, dtype=np.float64)
        lo = np.searchsorted(self.positions, centers - radius, side="right")
        hi = np.searchsorted(self.positions, centers + radius, side="left")
        return self._cumw[hi] - self._cumw[lo]

    def interval_mass(self, a, b):
        """Mass of the closed interval [a, b]."""
        lo = np.searchsorted(self.positions, a, side="left")
        hi = np.searchsorted(self.positions, b, side="right")
        return float(self._cumw[hi] - self._cumw[lo])

    def laplace_transform(self, x, t):
        """Sum of w_j * exp(-2 t |x - x_j|)  (t > 0).

        Exponent underflow silently clamps far terms to zero.
        """
        if t <= 0.0:
            raise ValidationError("laplace_transform requires t > 0")
        if self.is_degenerate:
            return 0.0
        with np.errstate(under="ignore"):
            return float(np.dot(self.weights, np.exp(-2.0 * t * np.abs(self.positions - x))))

    def restrict(self, excluded):
        """Drop atoms strictly inside any of the excluded open intervals.

        Interval endpoints survive, and so does an atom sitting exactly at
        an interval's midpoint (the punctured-neighbourhood convention:
        excluding (x - r, x + r) keeps an atom exactly at x).  The result
        may be degenerate.
        """
        keep = np.ones(len(self), dtype=bool)
        for iv in excluded:
            a, b = float(iv[0]), float(iv[1])
            if not a < b:
                raise ValidationError(f"malformed interval ({a}, {b})")
            center = 0.5 * (a + b)
            inside = (self.positions > a) & (self.positions < b)
            inside &= self.positions != center
            keep &= ~inside
        return AtomicMeasure(self.positions[keep], self.weights[keep])

    def scaled(self, factor):
        """Same atoms with every weight multiplied by `factor` (> 0)."""
        if factor <= 0.0:
            raise ValidationError("scale factor must be > 0")
        return AtomicMeasure(self.positions, self.weights * factor)

    # -- export ----------------------------------------------------------

    def to_csv(self, path):
        """Write "position,weight" rows for external plotting."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["position", "weight"])
            for p, w in zip(self.positions, self.weights):
                writer.writerow([repr(float(p)), repr(float(w))])

    def __repr__(self):
        return f"AtomicMeasure(n={len(self)}, mass={self.total_mass:.6g})"


def empty_measure():
    """The degenerate zero measure."""
    return AtomicMeasure([], [])


def _merge_close(pos, w):
    """Merge sorted atoms whose separation is rounding noise.

    Two consecutive atoms merge when their gap is below MERGE_RTOL
    relative to their magnitudes.  The threshold is relative to the
    positions themselves (not absolute), so ladders of subnormal offsets
    near zero keep their structure.
    """
    if pos.size < 2:
        return pos, w
    gaps = np.diff(pos)
    scale = np.maximum(np.abs(pos[:-1]), np.abs(pos[1:]))
    tiny = gaps <= MERGE_RTOL * scale
    if not np.any(tiny):
        return pos, w
    # group boundaries where a new cluster starts
    starts = np.flatnonzero(np.concatenate(([True], ~tiny)))
    merged_w = np.add.reduceat(w, starts)
    moment = np.add.reduceat(pos * w, starts)
    merged_pos = moment / merged_w
    return merged_pos, merged_w


def mix(parts):
    """Weighted sum of measures: atoms merged, shared positions summed.

    `parts` is a list of (AtomicMeasure, coefficient) with positive
    coefficients.  Total mass of the result is sum(c_i * mass_i).
    """
    if not parts:
        raise ValidationError("mix requires at least one part")
    pos_arrays, w_arrays = [], []
    for mu, coef in parts:
        c = float(coef)
        if c <= 0.0 or not math.isfinite(c):
            raise ValidationError("mixture coefficients must be finite and > 0")
        if mu.is_degenerate:
            continue
        pos_arrays.append(mu.positions)
        w_arrays.append(mu.weights * c)
    if not pos_arrays:
        return empty_measure()
    return AtomicMeasure(np.concatenate(pos_arrays), np.concatenate(w_arrays))


@dataclass(frozen=True)
class BallQuery:
    """An open ball (center - radius, center + radius)."""

    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValidationError("ball radius must be > 0")


# ----------------------------------------------------------------------
# Declarative measure specs
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitAtoms:
    """A finite list of (position, weight) atoms; refine is the identity."""

    atoms: tuple

    def __post_init__(self):
        if not self.atoms:
            raise ValidationError("ExplicitAtoms needs at least one atom", path="atoms")
        for i, (_, w) in enumerate(self.atoms):
            if not w > 0.0:
                raise ValidationError("atom weights must be > 0", path=f"atoms[{i}]")

    def mass(self):
        return float(sum(w for _, w in self.atoms))

    def refine(self, level, atom_cap=DEFAULT_ATOM_CAP):
        del level
        pos = [p for p, _ in self.atoms]
        w = [w for _, w in self.atoms]
        return AtomicMeasure(pos, w)

    def to_dict(self):
        return {"kind": "explicit_atoms", "atoms": [[float(p), float(w)] for p, w in self.atoms]}


#: density shapes supported by DensityOnInterval; each entry maps a
#: shape name to the exact integral of the (unnormalized) density over
#: [a, u] inside the base interval [a, b].
_DENSITY_PRIMITIVES = {
    "uniform": lambda u, a, b, p: (u - a) / (b - a),
    "power": lambda u, a, b, p: ((u - a) / (b - a)) ** (p + 1.0),
}


@dataclass(frozen=True)
class DensityOnInterval:
    """Absolutely continuous piece on [a, b] with a named density shape.

    Refinement splits [a, b] into 2**level midpoint cells; the cell
    weight is the exact density integral over the cell, so the total
    mass is preserved to rounding.
    """

    interval: tuple
    density: str = "uniform"
    mass_total: float = 1.0
    exponent: float = 0.0  # used by the "power" shape: density ~ (x-a)**exponent

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise ValidationError("interval must satisfy a < b", path="interval")
        if self.density not in _DENSITY_PRIMITIVES:
            raise ValidationError(f"unknown density shape {self.density!r}", path="density")
        if self.density == "power" and self.exponent <= -1.0:
            raise ValidationError("power exponent must be > -1", path="exponent")
        if not self.mass_total > 0.0:
            raise ValidationError("mass must be > 0", path="mass")

    def mass(self):
        return float(self.mass_total)

    def refine(self, level, atom_cap=DEFAULT_ATOM_CAP):
        if level < 0:
            raise ValidationError("level must be >= 0")
        cells = 2**level
        if cells > atom_cap:
            raise ResourceError(f"2**{level} cells exceed the atom cap {atom_cap}")
        a, b = self.interval
        edges = np.linspace(a, b, cells + 1)
        primitive = _DENSITY_PRIMITIVES[self.density]
        cdf = primitive(edges, a, b, self.exponent) * self.mass_total
        weights = np.diff(cdf)
        mids = 0.5 * (edges[:-1] + edges[1:])
        good = weights > 0.0
        return AtomicMeasure(mids[good], weights[good])

    def to_dict(self):
        d = {
            "kind": "density",
            "density": self.density,
            "interval": [float(self.interval[0]), float(self.interval[1])],
            "mass": float(self.mass_total),
        }
        if self.density == "power":
            d["exponent"] = float(self.exponent)
        return d


@dataclass(frozen=True)
class SelfSimilar:
    """Invariant measure of an IFS of affine contractions of [a, b].

    Maps are S_i(x) = ratio_i * x + translation_i; probability weights
    p_i sum to one.  The images of [a, b] must be pairwise disjoint up
    to touching endpoints (open set condition), checked at construction.
    Refinement at `level` places one atom at the midpoint of every
    level-cylinder, weighted by the product of the branch probabilities.

    The classical middle-thirds Cantor measure is
    SelfSimilar(ratios=(1/3, 1/3), translations=(0, 2/3), weights=(1/2, 1/2)).
    """

    ratios: tuple
    translations: tuple
    weights: tuple
    interval: tuple = (0.0, 1.0)

    def __post_init__(self):
        k = len(self.ratios)
        if k < 2 or len(self.translations) != k or len(self.weights) != k:
            raise ValidationError("ratios, translations, weights must have equal length >= 2")
        for r in self.ratios:
            if not 0.0 < r < 1.0:
                raise ValidationError("contraction ratios must lie in (0, 1)", path="ratios")
        for p in self.weights:
            if not p > 0.0:
                raise ValidationError("probability weights must be > 0", path="weights")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValidationError("probability weights must sum to 1", path="weights")
        a, b = self.interval
        if not a < b:
            raise ValidationError("interval must satisfy a < b", path="interval")
        images = sorted(
            (r * a + t, r * b + t) for r, t in zip(self.ratios, self.translations)
        )
        for (lo0, hi0), (lo1, _) in zip(images, images[1:]):
            if lo1 < hi0:
                raise ValidationError("IFS images overlap (open set condition)", path="ratios")
        if images[0][0] < a or images[-1][1] > b:
            raise ValidationError("IFS images must map [a, b] into itself", path="interval")

    def mass(self):
        return 1.0

    def branching(self):
        return len(self.ratios)

    def refine(self, level, atom_cap=DEFAULT_ATOM_CAP):
        if level < 0:
            raise ValidationError("level must be >= 0")
        k = self.branching()
        if k**level > atom_cap:
            raise ResourceError(f"{k}**{level} atoms exceed the atom cap {atom_cap}")
        a, b = self.interval
        pos = np.array([0.5 * (a + b)])
        w = np.array([1.0])
        r = np.asarray(self.ratios)
        t = np.asarray(self.translations)
        p = np.asarray(self.weights, dtype=np.float64)
        for _ in range(level):
            pos = (r[:, None] * pos[None, :] + t[:, None]).ravel()
            w = (p[:, None] * w[None, :]).ravel()
        return AtomicMeasure(pos, w)

    def to_dict(self):
        return {
            "kind": "self_similar",
            "ratios": [float(r) for r in self.ratios],
            "translations": [float(t) for t in self.translations],
            "weights": [float(p) for p in self.weights],
            "interval": [float(self.interval[0]), float(self.interval[1])],
        }


@dataclass(frozen=True)
class Restricted:
    """A spec with open intervals removed at refinement time.

    Mass is not preserved, so no closed-form spec mass is available.
    """

    base: object
    excluded: tuple

    def __post_init__(self):
        for iv in self.excluded:
            a, b = iv
            if not a < b:
                raise ValidationError(f"malformed interval ({a}, {b})", path="excluded")

    def mass(self):
        return None

    def refine(self, level, atom_cap=DEFAULT_ATOM_CAP):
        return self.base.refine(level, atom_cap=atom_cap).restrict(self.excluded)

    def to_dict(self):
        return {
            "kind": "restricted",
            "base": self.base.to_dict(),
            "excluded": [[float(a), float(b)] for a, b in self.excluded],
        }


@dataclass(frozen=True)
class Mixture:
    """Positive combination of sub-specs."""

    parts: tuple  # of (spec, coefficient)

    def __post_init__(self):
        if not self.parts:
            raise ValidationError("mixture needs at least one part", path="parts")
        for i, (_, c) in enumerate(self.parts):
            if not c > 0.0:
                raise ValidationError("mixture coefficients must be > 0", path=f"parts[{i}]")

    def mass(self):
        total = 0.0
        for spec, c in self.parts:
            m = spec.mass()
            if m is None:
                return None
            total += c * m
        return total

    def refine(self, level, atom_cap=DEFAULT_ATOM_CAP):
        return mix([(spec.refine(level, atom_cap=atom_cap), c) for spec, c in self.parts])

    def to_dict(self):
        return {
            "kind": "mixture",
            "parts": [{"spec": s.to_dict(), "coefficient": float(c)} for s, c in self.parts],
        }


def refine(spec, level, atom_cap=DEFAULT_ATOM_CAP):
    """Turn a declarative spec into its level-`level` atomic approximation."""
    return spec.refine(level, atom_cap=atom_cap)


def cantor_spec():
    """Middle-thirds Cantor measure on [0, 1]."""
    return SelfSimilar(ratios=(1 / 3, 1 / 3), translations=(0.0, 2 / 3), weights=(0.5, 0.5))


def uniform_spec(a=0.0, b=1.0, mass=1.0):
    """Uniform density on [a, b] with the given total mass."""
    return DensityOnInterval(interval=(float(a), float(b)), density="uniform", mass_total=mass)


# -- JSON-compatible (de)serialization ---------------------------------


def spec_from_dict(doc, path="measure"):
    """Parse a measure spec from a JSON-compatible tree.

    Raises ValidationError with a path into the document on any
    malformed field.
    """
    if not isinstance(doc, dict):
        raise ValidationError("spec must be an object", path=path)
    kind = doc.get("kind")
    try:
        if kind == "explicit_atoms":
            atoms = tuple((float(p), float(w)) for p, w in doc["atoms"])
            return ExplicitAtoms(atoms=atoms)
        if kind == "density":
            return DensityOnInterval(
                interval=tuple(float(v) for v in doc["interval"]),
                density=doc.get("density", "uniform"),
                mass_total=float(doc.get("mass", 1.0)),
                exponent=float(doc.get("exponent", 0.0)),
            )
        if kind == "self_similar":
            return SelfSimilar(
                ratios=tuple(float(v) for v in doc["ratios"]),
                translations=tuple(float(v) for v in doc["translations"]),
                weights=tuple(float(v) for v in doc["weights"]),
                interval=tuple(float(v) for v in doc.get("interval", (0.0, 1.0))),
            )
        if kind == "restricted":
            base = spec_from_dict(doc["base"], path=path + ".base")
            excluded = tuple((float(a), float(b)) for a, b in doc["excluded"])
            return Restricted(base=base, excluded=excluded)
        if kind == "mixture":
            parts = tuple(
                (spec_from_dict(item["spec"], path=f"{path}.parts[{i}].spec"), float(item["coefficient"]))
                for i, item in enumerate(doc["parts"])
            )
            return Mixture(parts=parts)
        if kind == "cantor":
            return cantor_spec()
        if kind == "uniform":
            iv = doc.get("interval", (0.0, 1.0))
            return uniform_spec(iv[0], iv[1], float(doc.get("mass", 1.0)))
    except ValidationError as exc:
        if exc.path is None or not str(exc.path).startswith(path):
            raise ValidationError(exc.message, path=f"{path}.{exc.path}" if exc.path else path) from exc
        raise
    except (KeyError, TypeError, IndexError) as exc:
        raise ValidationError(f"malformed spec: {exc}", path=path) from exc
    raise ValidationError(f"unknown measure kind {kind!r}", path=path + ".kind")
