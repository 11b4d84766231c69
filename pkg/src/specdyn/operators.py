"""Concrete operator families realized as finite Jacobi matrices.

Operators act on l2(Z) in principle; here they are truncated to a
finite index window with free (Dirichlet) boundary conditions, and the
truncation size is an explicit experiment parameter.  The spectral
measure of a state is read off the eigendecomposition of the symmetric
tridiagonal matrix: atoms at the eigenvalues, weights |<phi_k, psi>|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError, ValidationError
from .measures import AtomicMeasure, empty_measure

#: golden rotation number frac((1+sqrt 5)/2) = (sqrt 5 - 1)/2, the
#: canonical bounded-density irrational
GOLDEN_ROTATION = (math.sqrt(5.0) - 1.0) / 2.0

_NAMED_ROTATIONS = {
    "golden": GOLDEN_ROTATION,
    "silver": math.sqrt(2.0) - 1.0,
}


@dataclass(frozen=True)
class JacobiOperator:
    """Tridiagonal operator: diagonal potential, constant off-diagonal.

    The potential covers the lattice window {offset, ..., offset+size-1}.
    off_diagonal is 1 for the physical operators; 0 is allowed as a
    degenerate test mode (pure multiplication operator).
    """

    potential: np.ndarray
    offset: int = 0
    off_diagonal: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.potential, dtype=np.float64).ravel()
        if v.size < 2:
            raise ValidationError("operator size must be >= 2")
        if not np.all(np.isfinite(v)):
            raise ValidationError("potential must be bounded (finite entries)")
        v.setflags(write=False)
        object.__setattr__(self, "potential", v)

    @property
    def size(self):
        return self.potential.size

    @property
    def potential_bound(self):
        return float(np.max(np.abs(self.potential)))

    def lattice_sites(self):
        return np.arange(self.offset, self.offset + self.size)

    def index_of(self, n):
        """Matrix row of lattice site n."""
        i = n - self.offset
        if not 0 <= i < self.size:
            raise ValidationError(f"site {n} outside window [{self.offset}, {self.offset + self.size - 1}]")
        return i

    def gershgorin_interval(self):
        r = 2.0 * abs(self.off_diagonal)
        return float(np.min(self.potential)) - r, float(np.max(self.potential)) + r

    def potential_to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "v"])
            for n, v in zip(self.lattice_sites(), self.potential):
                writer.writerow([int(n), repr(float(v))])

    def to_dict(self):
        return {
            "kind": "jacobi",
            "potential": [float(v) for v in self.potential],
            "offset": int(self.offset),
            "off_diagonal": float(self.off_diagonal),
        }


def centered_window(size):
    """Offset putting site 0 (as near as possible to) the window center."""
    return -(size // 2)


def free_operator(size):
    """Discrete free Laplacian truncation: zero potential, off-diagonal 1."""
    return JacobiOperator(potential=np.zeros(size), offset=centered_window(size))


# ----------------------------------------------------------------------
# Sturmian potentials
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class SturmianParams:
    """Coupling, irrational rotation number in (0,1), phase in [0,1).

    theta is a double; its irrationality is a documented approximation
    (the stored double is of course rational, but the induced sequence
    is evaluated exactly for that double).
    """

    coupling: float
    theta: float = GOLDEN_ROTATION
    beta: float = 0.0
    theta_name: str = ""

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValidationError("rotation number must lie in (0, 1)")
        if not 0.0 <= self.beta < 1.0:
            raise ValidationError("phase must lie in [0, 1)")

    @classmethod
    def named(cls, coupling, name="golden", beta=0.0):
        try:
            theta = _NAMED_ROTATIONS[name]
        except KeyError:
            raise ValidationError(f"unknown rotation name {name!r}") from None
        return cls(coupling=coupling, theta=theta, beta=beta, theta_name=name)


def _split_double(x):
    """Dekker split of a double into a 26-bit head and a tail."""
    c = x * (2.0**27 + 1.0)
    hi = c - (c - x)
    return hi, x - hi


def fractional_parts(theta, beta, indices):
    """frac(n*theta + beta) with compensated reduction.

    n*theta computed naively loses ~|n|*eps absolutely; splitting theta
    keeps n*theta_hi exact for |n| up to ~2**26 and the tail small, so
    the result is accurate to a few ulp for |n| up to 1e7.
    """
    n = np.asarray(indices, dtype=np.float64)
    if n.size == 0:
        raise ValidationError("index window must be nonempty")
    if np.max(np.abs(n)) >= 2.0**26:
        raise ValidationError("compensated reduction supports |n| < 2**26")
    hi, lo = _split_double(theta)
    f = np.mod(n * hi, 1.0) + n * lo + beta
    return np.mod(f, 1.0)


def sturmian_potential(params, indices):
    """v_n = coupling * 1{frac(n theta + beta) in [1-theta, 1)}."""
    frac = fractional_parts(params.theta, params.beta, indices)
    return np.where(frac >= 1.0 - params.theta, params.coupling, 0.0)


def sturmian_indicator_exact(theta, beta, n):
    """Oracle: the indicator evaluated in exact rational arithmetic.

    Treats the double values of theta and beta as exact rationals
    (every double is one), so this is the ground truth the compensated
    float path must reproduce.
    """
    th = Fraction(theta)
    f = (n * th + Fraction(beta)) % 1
    return 1 if f >= 1 - th else 0


def sturmian_operator(params, size):
    """Sturmian Jacobi truncation on a centered window."""
    offset = centered_window(size)
    v = sturmian_potential(params, np.arange(offset, offset + size))
    return JacobiOperator(potential=v, offset=offset)


# ----------------------------------------------------------------------
# limit-periodic potentials via periodic approximants
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LimitPeriodicParams:
    """Truncated period-doubling expansion: v_n = sum_k c_k phi_k(n).

    phi_k is the +-1 square wave of period base_period * 2**k, so the
    depth-K approximant is exactly periodic with period
    base_period * 2**K.  Summable coefficients make the full expansion a
    uniform limit of such periodic sequences.
    """

    coefficients: tuple
    base_period: int = 1

    def __post_init__(self):
        if len(self.coefficients) < 1:
            raise ValidationError("need truncation depth K >= 1")
        if self.base_period < 1:
            raise ValidationError("base period must be >= 1")
        if not all(math.isfinite(c) for c in self.coefficients):
            raise ValidationError("coefficients must be finite")

    @property
    def depth(self):
        return len(self.coefficients)

    @property
    def period(self):
        return self.base_period * 2**self.depth

    def coefficient_sum(self):
        return float(sum(abs(c) for c in self.coefficients))


def square_wave(period_half, indices):
    """+1 on even half-periods, -1 on odd; full period = 2*period_half."""
    return np.where((np.floor_divide(indices, period_half)) % 2 == 0, 1.0, -1.0)


def limit_periodic_potential(params, indices):
    n = np.asarray(indices)
    if n.size == 0:
        raise ValidationError("index window must be nonempty")
    v = np.zeros(n.shape, dtype=np.float64)
    for k, c in enumerate(params.coefficients, start=1):
        if c == 0.0:
            continue
        v += c * square_wave(params.base_period * 2 ** (k - 1), n)
    return v


def limit_periodic_operator(params, size):
    offset = centered_window(size)
    v = limit_periodic_potential(params, np.arange(offset, offset + size))
    return JacobiOperator(potential=v, offset=offset)


# ----------------------------------------------------------------------
# spectral measures
# ----------------------------------------------------------------------


def spectral_measure(op, state):
    """Spectral measure of (op, state) from the eigendecomposition.

    `state` is either a lattice site (int: the basis vector delta_n) or
    a coefficient vector of length op.size.  Atoms sit at the
    eigenvalues with weights |<phi_k, state>|^2; total mass is the
    squared norm of the state (Parseval, to solver accuracy).
    """
    e = np.full(op.size - 1, float(op.off_diagonal))
    try:
        eigvals, eigvecs = eigh_tridiagonal(op.potential, e, check_finite=False)
    except Exception as exc:  # LinAlgError and friends
        raise NumericalError(
            f"tridiagonal eigensolver failed for size {op.size} "
            f"(potential bound {op.potential_bound:g}): {exc}"
        ) from exc

    if isinstance(state, (int, np.integer)):
        amps = eigvecs[op.index_of(int(state)), :]
    else:
        psi = np.asarray(state, dtype=np.float64).ravel()
        if psi.size != op.size:
            raise ValidationError("state dimension must equal the operator size")
        amps = eigvecs.T @ psi
    weights = amps * amps
    keep = weights > 0.0
    return AtomicMeasure(eigvals[keep], weights[keep])


def free_spectral_measure(size, site=0):
    """Spectral measure of delta_site under the free truncation."""
    op = free_operator(size)
    return spectral_measure(op, site)


def free_restricted_measure(size, interval):
    """Free delta_0 measure with atoms outside the energy window dropped.

    The window must sit inside the free spectrum [-2, 2]; an empty
    result is returned as a degenerate (flagged) measure.
    """
    a, b = float(interval[0]), float(interval[1])
    if not a < b:
        raise ValidationError("energy window must satisfy a < b")
    if a < -2.0 or b > 2.0:
        raise ValidationError("energy window must lie inside [-2, 2]")
    mu = free_spectral_measure(size)
    keep = (mu.positions >= a) & (mu.positions <= b)
    if not np.any(keep):
        return empty_measure()
    return AtomicMeasure(mu.positions[keep], mu.weights[keep])


def arcsine_cdf(x):
    """Distribution function of the free spectral density on [-2, 2]."""
    x = np.clip(np.asarray(x, dtype=np.float64), -2.0, 2.0)
    return 0.5 + np.arcsin(x / 2.0) / math.pi


def cdf_on(mu, energies):
    """mu((-inf, e]) for each probe energy, normalized by nothing."""
    idx = np.searchsorted(mu.positions, np.asarray(energies), side="right")
    return mu._cumw[idx]
