"""Time-averaged return probability computed in closed form from atoms.

For an atomic measure with atoms (x_j, w_j) the autocorrelation
amplitude is the Fourier transform of the measure,

    mu_hat(s) = sum_j w_j exp(-i s x_j),

and the time average of |mu_hat|^2 over [0, t] collapses to a pairwise
kernel sum,

    W(t) = sum_{j,k} w_j w_k K(t (x_j - x_k)),   K(u) = sin(u)/u, K(0) = 1,

because (1/t) * integral_0^t exp(-i s d) ds has real part sin(td)/(td).
This is exact, so no time stepping is ever needed.  Cost is O(n^2) per
time point; the kernel's 1/|u| envelope gives an optional near-diagonal
truncation with a computable error bound.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ResourceError, ValidationError

#: default cap on atom pairs per W evaluation (n^2 <= budget)
DEFAULT_PAIR_BUDGET = 2**28

#: above this atom count the flattened pair arrays are not precomputed
_PRECOMPUTE_MAX_ATOMS = 4200

#: rows per block in the blocked pairwise sweep
_BLOCK_ROWS = 512


@dataclass(frozen=True)
class LogSeries:
    """Samples of a positive quantity on a strictly increasing grid."""

    grid: np.ndarray
    values: np.ndarray
    kind: str = "time-domain W"
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if g.ndim != 1 or g.shape != v.shape:
            raise ValidationError("grid and values must be 1-d arrays of equal length")
        if g.size and (np.any(g <= 0.0) or np.any(np.diff(g) <= 0.0)):
            raise ValidationError("grid must be positive and strictly increasing")
        if v.size and np.any(v < 0.0):
            raise ValidationError("series values must be >= 0")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.grid.size

    def to_csv(self, path, names=("t", "value")):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(names))
            for g, v in zip(self.grid, self.values):
                writer.writerow([repr(float(g)), repr(float(v))])

    def to_json(self, path=None):
        doc = {
            "kind": self.kind,
            "provenance": self.provenance,
            "grid": [float(g) for g in self.grid],
            "values": [float(v) for v in self.values],
        }
        if path is None:
            return doc
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return doc


def autocorrelation(mu, s):
    """mu_hat(s) = sum_j w_j exp(-i s x_j); |result| <= total mass."""
    if mu.is_degenerate:
        return 0.0 + 0.0j
    phase = -1j * s * mu.positions
    return complex(np.dot(mu.weights, np.exp(phase)))


def _sinc(u):
    """sin(u)/u with the analytic value 1 at u = 0."""
    s = np.sin(u)
    np.divide(s, u, out=s, where=u != 0.0)
    if np.ndim(s):
        s[u == 0.0] = 1.0
    elif u == 0.0:
        return 1.0
    return s


def return_probability_avg(mu, t, pair_budget=DEFAULT_PAIR_BUDGET, phase_cutoff=None):
    """Closed-form W(t) = sum_{j,k} w_j w_k sinc(t (x_j - x_k)).

    Evaluated as diagonal + 2 * (upper triangle), in blocks, exploiting
    the sorted positions.  With `phase_cutoff` = u_max the pairs with
    t * |x_j - x_k| > u_max are skipped; since |sinc(u)| <= 1/u_max
    there, the neglected part is bounded by total_mass**2 / u_max (the
    documented truncation bound, see `truncation_bound`).

    Raises ResourceError when n**2 exceeds `pair_budget` and truncation
    is disabled.
    """
    if t <= 0.0:
        raise ValidationError("return_probability_avg requires t > 0")
    n = len(mu)
    if n == 0:
        return 0.0
    if phase_cutoff is None and n * n > pair_budget:
        raise ResourceError(
            f"{n}**2 atom pairs exceed the budget {pair_budget}; "
            "raise pair_budget or enable phase_cutoff truncation"
        )
    pos = mu.positions
    w = mu.weights
    diag = float(np.dot(w, w))
    if n == 1:
        return diag
    if phase_cutoff is not None:
        if phase_cutoff <= 0.0:
            raise ValidationError("phase_cutoff must be > 0")
        return diag + 2.0 * _offdiag_truncated(pos, w, t, phase_cutoff / t)
    return diag + 2.0 * _offdiag_full(pos, w, t)


def _offdiag_full(pos, w, t):
    """sum_{j<k} w_j w_k sinc(t (x_k - x_j)), blocked over rows.

    Rows [start, stop) pair with all columns >= stop as a full rectangle
    (positions are strictly increasing, so every difference there is > 0);
    pairs inside the row block form a small local triangle.
    """
    n = pos.size
    acc = 0.0
    for start in range(0, n - 1, _BLOCK_ROWS):
        stop = min(start + _BLOCK_ROWS, n)
        if stop < n:
            u = t * (pos[None, stop:] - pos[start:stop, None])
            s = np.sin(u)
            s /= u
            acc += float(w[start:stop] @ s @ w[stop:])
        m = stop - start
        if m > 1:
            iu, ju = np.triu_indices(m, k=1)
            d = pos[start:stop][ju] - pos[start:stop][iu]
            s = _sinc(t * d)
            acc += float(np.dot(s, w[start:stop][iu] * w[start:stop][ju]))
    return acc


def _offdiag_truncated(pos, w, t, max_dist):
    """Upper-triangle sum restricted to pairs with x_k - x_j <= max_dist."""
    n = pos.size
    acc = 0.0
    hi = np.searchsorted(pos, pos + max_dist, side="right")
    for j in range(n - 1):
        k = hi[j]
        if k <= j + 1:
            continue
        u = t * (pos[j + 1 : k] - pos[j])
        s = np.sin(u)
        s /= u
        acc += w[j] * float(np.dot(s, w[j + 1 : k]))
    return acc


def truncation_bound(mu, phase_cutoff):
    """Bound on |W_exact - W_truncated| for the given phase cutoff."""
    return mu.total_mass**2 / phase_cutoff


def wiener_limit(mu):
    """Large-time limit of W(t): the sum of squared atom weights."""
    return float(np.dot(mu.weights, mu.weights))


def sample_W(
    mu,
    t_min,
    t_max,
    points=None,
    pair_budget=DEFAULT_PAIR_BUDGET,
    phase_cutoff=None,
    workers=1,
):
    """W(t) on a geometric grid; deterministic for fixed inputs.

    `points` defaults to 20 per decade.  Grid points are independent, so
    they may be fanned out over `workers` threads; results are assembled
    in grid order and do not depend on the worker count.
    """
    if not 0.0 < t_min < t_max:
        raise ValidationError("need 0 < t_min < t_max")
    if points is None:
        points = max(2, int(round(20 * math.log10(t_max / t_min))) + 1)
    if points < 2:
        raise ValidationError("need at least 2 grid points")
    grid = np.geomspace(t_min, t_max, points)
    n = len(mu)
    if phase_cutoff is None and n * n > pair_budget:
        raise ResourceError(
            f"{n}**2 atom pairs exceed the budget {pair_budget} for the W grid"
        )

    if 1 < n <= _PRECOMPUTE_MAX_ATOMS and phase_cutoff is None:
        values = _sample_precomputed(mu, grid, workers)
    else:
        def one(t):
            return return_probability_avg(
                mu, float(t), pair_budget=pair_budget, phase_cutoff=phase_cutoff
            )

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = np.array(list(pool.map(one, grid)))
        else:
            values = np.array([one(t) for t in grid])

    provenance = {
        "atoms": n,
        "total_mass": mu.total_mass,
        "t_min": float(t_min),
        "t_max": float(t_max),
        "points": int(points),
        "phase_cutoff": phase_cutoff,
    }
    return LogSeries(grid=grid, values=values, kind="time-domain W", provenance=provenance)


def _sample_precomputed(mu, grid, workers):
    """Reuse the flattened upper-triangle pair arrays across the grid."""
    pos = mu.positions
    w = mu.weights
    n = pos.size
    iu, ju = np.triu_indices(n, k=1)
    diffs = pos[ju] - pos[iu]
    pw = w[iu] * w[ju]
    diag = float(np.dot(w, w))

    def one(t):
        u = t * diffs
        s = np.sin(u)
        s /= u
        return diag + 2.0 * float(np.dot(s, pw))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(one, grid)))
    return np.array([one(float(t)) for t in grid])
