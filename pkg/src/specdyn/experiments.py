"""Named experiments: configs in, deterministic artifacts + report out.

Every experiment takes a JSON-compatible config document, computes its
result tables, evaluates its pass/fail checks (each check records the
measured number and the threshold it was held against), writes CSV/JSON
artifacts when an output directory is given, and returns a Report.

Reruns with identical config and seed produce byte-identical artifacts;
wall-clock timing is therefore kept out of report.json and only shown
in the printed summary.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import constructors, dimensions, dynamics, measures, operators
from .errors import ValidationError

DEFAULT_SEED = 1
DEFAULT_PAIR_BUDGET = dynamics.DEFAULT_PAIR_BUDGET

WORKERS_ENV_VAR = "SPECDYN_WORKERS"


def worker_count():
    """Worker threads for grid fan-out, from the environment (default 1)."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV_VAR, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Check:
    """One pass/fail entry: always carries measured value and threshold."""

    name: str
    measured: float
    threshold: float
    relation: str  # "<=", ">=", "abs<=", "inside-open", "equals"
    passed: bool
    detail: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "measured": _jsonable(self.measured),
            "threshold": _jsonable(self.threshold),
            "relation": self.relation,
            "passed": bool(self.passed),
            "detail": self.detail,
        }


def _check_le(name, measured, threshold, detail=""):
    return Check(name, measured, threshold, "<=", bool(measured <= threshold), detail)


def _check_ge(name, measured, threshold, detail=""):
    return Check(name, measured, threshold, ">=", bool(measured >= threshold), detail)


def _check_abs_le(name, measured, threshold, detail=""):
    return Check(name, measured, threshold, "abs<=", bool(abs(measured) <= threshold), detail)


def _check_inside_open(name, measured, lo, hi, detail=""):
    return Check(name, measured, (lo, hi), "inside-open", bool(lo < measured < hi), detail)


@dataclass
class Report:
    """Outcome of one experiment run."""

    name: str
    experiment: str
    inputs: dict
    tables: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)
    resources: dict = field(default_factory=dict)
    wallclock_s: float = 0.0  # printed, never serialized

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "name": self.name,
            "experiment": self.experiment,
            "inputs": _jsonable(self.inputs),
            "tables": _jsonable(self.tables),
            "checks": [c.to_dict() for c in self.checks],
            "artifacts": sorted(self.artifacts),
            "resources": _jsonable(self.resources),
            "passed": self.passed,
        }

    def summary_lines(self):
        lines = [f"experiment {self.name!r} ({self.experiment}): "
                 f"{'PASS' if self.passed else 'FAIL'} in {self.wallclock_s:.2f}s"]
        for c in self.checks:
            mark = "pass" if c.passed else "FAIL"
            lines.append(
                f"  [{mark}] {c.name}: measured {_fmt(c.measured)} "
                f"{c.relation} {_fmt(c.threshold)}"
                + (f"  ({c.detail})" if c.detail else "")
            )
        return lines


def _fmt(v):
    if isinstance(v, tuple):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    return obj


# ----------------------------------------------------------------------
# config helpers
# ----------------------------------------------------------------------


def _require(cfg, key, path):
    if key not in cfg:
        raise ValidationError(f"missing required field {key!r}", path=path)
    return cfg[key]


def _grid_config(doc, path):
    lo = float(_require(doc, "min", path))
    hi = float(_require(doc, "max", path))
    if not 0.0 < lo < hi:
        raise ValidationError("grid must satisfy 0 < min < max", path=path)
    points = doc.get("points")
    if points is not None and int(points) < 2:
        raise ValidationError("grid needs at least 2 points", path=path)
    return lo, hi, None if points is None else int(points)


def random_atomic_measure(rng, count, position_range=(0.0, 1.0), mass=1.0):
    """Seeded random fixture: uniform positions, Dirichlet-like weights."""
    if count < 1:
        raise ValidationError("random measure needs at least one atom")
    lo, hi = position_range
    pos = rng.uniform(lo, hi, size=count)
    w = rng.uniform(0.2, 1.0, size=count)
    w *= mass / w.sum()
    return measures.AtomicMeasure(pos, w)


def measure_from_config(cfg, rng, path="measure"):
    """Resolve the measure referenced by an experiment config.

    Either a declarative spec plus refinement "level", a seeded
    "random_atoms" fixture, or an operator + state block.
    """
    if "operator" in cfg:
        op = operator_from_config(cfg["operator"], path=path_join(path, "operator"))
        state = state_from_config(cfg.get("state", {"delta": 0}), op)
        mu = operators.spectral_measure(op, state)
        info = {"operator": cfg["operator"], "state": cfg.get("state", {"delta": 0})}
        return mu, info
    doc = _require(cfg, "measure", path)
    if isinstance(doc, dict) and doc.get("kind") == "random_atoms":
        count = int(doc.get("count", 10))
        pr = tuple(doc.get("position_range", (0.0, 1.0)))
        mu = random_atomic_measure(rng, count, pr, float(doc.get("mass", 1.0)))
        return mu, {"measure": doc}
    spec = measures.spec_from_dict(doc, path=path_join(path, "measure"))
    level = int(_require(cfg, "level", path_join(path, "level")))
    cap = int(cfg.get("atom_cap", measures.DEFAULT_ATOM_CAP))
    mu = measures.refine(spec, level, atom_cap=cap)
    return mu, {"measure": spec.to_dict(), "level": level}


def path_join(*parts):
    return ".".join(p for p in parts if p)


def operator_from_config(doc, path="operator"):
    family = doc.get("family")
    size = int(_require(doc, "size", path_join(path, "size")))
    if family == "free":
        return operators.free_operator(size)
    if family == "sturmian":
        theta = doc.get("theta", "golden")
        if isinstance(theta, str):
            params = operators.SturmianParams.named(
                coupling=float(_require(doc, "coupling", path_join(path, "coupling"))),
                name=theta,
                beta=float(doc.get("beta", 0.0)),
            )
        else:
            params = operators.SturmianParams(
                coupling=float(_require(doc, "coupling", path_join(path, "coupling"))),
                theta=float(theta),
                beta=float(doc.get("beta", 0.0)),
            )
        return operators.sturmian_operator(params, size)
    if family == "limit_periodic":
        params = operators.LimitPeriodicParams(
            coefficients=tuple(float(c) for c in _require(doc, "coefficients", path)),
            base_period=int(doc.get("base_period", 1)),
        )
        return operators.limit_periodic_operator(params, size)
    if family == "explicit":
        return operators.JacobiOperator(
            potential=np.asarray(_require(doc, "potential", path), dtype=float),
            offset=int(doc.get("offset", 0)),
            off_diagonal=float(doc.get("off_diagonal", 1.0)),
        )
    raise ValidationError(f"unknown operator family {family!r}", path=path_join(path, "family"))


def state_from_config(doc, op):
    if "delta" in doc:
        return int(doc["delta"])
    if "vector" in doc:
        return np.asarray(doc["vector"], dtype=float)
    raise ValidationError("state must give 'delta' or 'vector'", path="state")


def _sample_w_from_config(mu, cfg, budget):
    lo, hi, points = _grid_config(_require(cfg, "time_grid", "time_grid"), "time_grid")
    return dynamics.sample_W(
        mu,
        lo,
        hi,
        points=points,
        pair_budget=budget,
        phase_cutoff=cfg.get("phase_cutoff"),
        workers=worker_count(),
    )


# ----------------------------------------------------------------------
# the experiments
# ----------------------------------------------------------------------


def run_spectrum(cfg, rng, report):
    op = operator_from_config(_require(cfg, "operator", "operator"))
    state = state_from_config(cfg.get("state", {"delta": 0}), op)
    mu = operators.spectral_measure(op, state)
    window = cfg.get("energy_window")
    if window is not None:
        keep = (mu.positions >= float(window[0])) & (mu.positions <= float(window[1]))
        mu = (
            measures.AtomicMeasure(mu.positions[keep], mu.weights[keep])
            if np.any(keep)
            else measures.empty_measure()
        )
    norm2 = 1.0 if isinstance(state, int) else float(np.dot(state, state))
    lo_g, hi_g = op.gershgorin_interval()
    report.tables["spectrum"] = {
        "atoms": len(mu),
        "total_mass": mu.total_mass,
        "support": None if mu.is_degenerate else [mu.support_min, mu.support_max],
        "degenerate": mu.is_degenerate,
        "gershgorin": [lo_g, hi_g],
    }
    if window is None:
        report.checks.append(
            _check_le("parseval-residual", abs(mu.total_mass - norm2), 1e-10)
        )
    if not mu.is_degenerate:
        outside = float(
            np.sum((mu.positions < lo_g - 1e-9) | (mu.positions > hi_g + 1e-9))
        )
        report.checks.append(_check_le("gershgorin-escapes", outside, 0.0))
    conv = cfg.get("convergence_check")
    if conv:
        if not isinstance(state, (int, np.integer)):
            raise ValidationError("convergence check requires a delta state", path="state")
        probes = np.linspace(lo_g, hi_g, int(conv.get("probes", 9)))
        op2 = operator_from_config(dict(cfg["operator"], size=2 * op.size))
        mu2 = operators.spectral_measure(op2, int(state))
        d = float(
            np.max(np.abs(operators.cdf_on(mu, probes) - operators.cdf_on(mu2, probes)))
        )
        report.checks.append(
            _check_le("cdf-self-convergence", d, float(conv.get("tolerance", 0.02)))
        )
    return mu, None


def run_dynamics(cfg, rng, report):
    budget = int(cfg.get("budget", DEFAULT_PAIR_BUDGET))
    mu, info = measure_from_config(cfg, rng)
    report.inputs.update(info)
    series = _sample_w_from_config(mu, cfg, budget)
    report.tables["w_series"] = {"points": len(series), "first": float(series.values[0]),
                                 "last": float(series.values[-1])}
    checks = cfg.get("checks", {})
    if "wiener" in checks:
        wc = checks["wiener"]
        gap = mu.min_gap()
        if not math.isfinite(gap):
            raise ValidationError("wiener check needs at least two atoms")
        big_t = float(wc.get("t_over_gap", 1e3)) / gap
        w_inf = dynamics.wiener_limit(mu)
        w_t = dynamics.return_probability_avg(mu, big_t, pair_budget=budget)
        tol = 2.0 * mu.total_mass**2 / (big_t * gap)
        report.checks.append(
            _check_le("wiener-limit", abs(w_t - w_inf), tol,
                      detail=f"T={big_t:.6g}, sum w^2={w_inf:.6g}")
        )
    if "envelope_slope_range" in checks:
        lo, hi = checks["envelope_slope_range"]
        wp = int(cfg.get("window_points", dimensions.DEFAULT_WINDOW_POINTS))
        est = dimensions.envelope_slopes(series, window_points=wp)
        report.checks.append(_check_ge("w-envelope-lower", est.lower, float(lo)))
        report.checks.append(_check_le("w-envelope-upper", est.upper, float(hi)))
        report.tables["w_envelope"] = est.to_dict()
    return mu, series


def run_dims(cfg, rng, report):
    mu, info = measure_from_config(cfg, rng)
    report.inputs.update(info)
    wp_default = int(cfg.get("window_points", dimensions.DEFAULT_WINDOW_POINTS))

    if "correlation" in cfg:
        c = cfg["correlation"]
        est = dimensions.generalized_dimension(
            mu,
            q=float(c.get("q", 2.0)),
            window=tuple(_require(c, "window", "correlation.window")),
            points=int(c.get("points", 49)),
            window_points=int(c.get("window_points", wp_default)),
        )
        report.tables["generalized_dimension"] = est.to_dict()
        if "expected" in c:
            tol = float(c.get("tolerance", 0.05))
            expected = float(c["expected"])
            report.checks.append(
                _check_abs_le("dimension-lower-error", est.lower - expected, tol)
            )
            report.checks.append(
                _check_abs_le("dimension-upper-error", est.upper - expected, tol)
            )

    if "pointwise" in cfg:
        p = cfg["pointwise"]
        x = float(_require(p, "x", "pointwise.x"))
        window = tuple(_require(p, "window", "pointwise.window"))
        route = p.get("route", "both")
        estimator = p.get("estimator", "window")
        points = int(p.get("points", 49))
        wp = int(p.get("window_points", wp_default))
        ests = {}
        for r in ("ball", "laplace") if route == "both" else (route,):
            ests[r] = dimensions.pointwise_exponents(
                mu, x, window, route=r, estimator=estimator,
                points=points, window_points=wp,
            )
            report.tables[f"pointwise_{r}"] = ests[r].to_dict()
        if route == "both" and "agreement_tolerance" in p:
            tol = float(p["agreement_tolerance"])
            b, l = ests["ball"], ests["laplace"]
            report.checks.append(
                _check_abs_le("route-agreement-lower", b.lower - l.lower, tol)
            )
            report.checks.append(
                _check_abs_le("route-agreement-upper", b.upper - l.upper, tol)
            )
        if "expected" in p:
            tol = float(p.get("tolerance", 0.05))
            for r, est in ests.items():
                report.checks.append(
                    _check_abs_le(f"pointwise-{r}-lower-error",
                                  est.lower - float(p["expected"]), tol)
                )

    if "uah" in cfg:
        u = cfg["uah"]
        scales = [float(h) for h in _require(u, "scales", "uah.scales")]
        rep = dimensions.uah_modulus(mu, float(_require(u, "alpha", "uah.alpha")), scales)
        report.tables["uah"] = rep.to_dict()
        if "expect" in u:
            want = u["expect"]
            got = "diverging" if rep.verdict == "diverging" else "bounded"
            report.checks.append(
                Check(
                    name="uah-verdict",
                    measured=rep.growth_rate,
                    threshold=3.0 * rep.growth_stderr,
                    relation=f"verdict=={want}",
                    passed=(got == want),
                    detail=f"verdict {rep.verdict}",
                )
            )

    if "sandwich_sweep" in cfg:
        s = cfg["sandwich_sweep"]
        violations, samples = sandwich_sweep(mu, rng, int(s.get("samples", 1000)))
        report.tables["sandwich_sweep"] = {"samples": samples, "violations": violations}
        report.checks.append(_check_le("sandwich-violations", float(violations), 0.0))
    return mu, None


def sandwich_sweep(mu, rng, samples):
    """Randomized two-sided Laplace/ball bounds; returns (violations, n).

    Checks  e^-2 mu(B(x;1/t)) <= L(x,t) <= mu(B(x; t^(d-1))) + e^(-t^d) mass
    pointwise on random (x, t, delta).
    """
    lo = mu.support_min - 1.0
    hi = mu.support_max + 1.0
    violations = 0
    for _ in range(samples):
        x = rng.uniform(lo, hi)
        t = 10.0 ** rng.uniform(-1.0, 6.0)
        delta = rng.uniform(0.05, 0.95)
        lap = mu.laplace_transform(x, t)
        lower = math.exp(-2.0) * mu.ball_mass(x, 1.0 / t)
        upper = mu.ball_mass(x, t ** (delta - 1.0)) + math.exp(-(t**delta)) * mu.total_mass
        if not (lower <= lap <= upper):
            violations += 1
    return violations, samples


def run_construct(cfg, rng, report):
    doc = _require(cfg, "construction", "construction")
    kind = doc.get("kind")
    if kind == "slow_schedule":
        schedule = slow_schedule_from_config(doc)
        mu = constructors.slow_measure(schedule)
        tails = schedule.tail_sums()
        worst = float(np.min(tails - np.array([2.0**-j for j in schedule.levels()])))
        report.checks.append(_check_ge("slow-tail-inequality-margin", worst, 0.0))
        report.tables["schedule"] = schedule.to_dict()
        return mu, None
    if kind == "smooth":
        base, info = measure_from_config(doc["base"], rng, path="construction.base")
        report.inputs.update({"base": info})
        x = float(_require(doc, "x", "construction.x"))
        rho = float(_require(doc, "rho", "construction.rho"))
        n = float(_require(doc, "n", "construction.n"))
        mu = constructors.smooth_state(base, x, rho, n)
        ts = np.geomspace(1.0, 1e6, 25)
        worst = -math.inf
        for t in ts:
            bound = constructors.smooth_laplace_bound(base, rho, n, float(t))
            worst = max(worst, mu.laplace_transform(x, float(t)) - bound)
        report.checks.append(_check_le("smooth-laplace-bound-excess", worst, 0.0))
        report.tables["smooth"] = {"mass_in": base.total_mass, "mass_out": mu.total_mass}
        return mu, None
    if kind == "splice":
        psi, info = measure_from_config(doc["psi"], rng, path="construction.psi")
        report.inputs.update({"psi": info})
        schedule = slow_schedule_from_config(_require(doc, "eta", "construction.eta"))
        eta = constructors.slow_measure(schedule)
        n = int(_require(doc, "n", "construction.n"))
        x = schedule.center
        validate_splice_schedule(schedule, n, path="construction")
        mu = constructors.splice_state(psi, eta, n, x)
        worst = 0.0
        tested = 0
        for j in schedule.levels():
            eps = constructors.ladder_scale(j)
            if eps >= 1.0 / n:
                continue
            tested += 1
            lhs = mu.ball_mass(x, eps)
            rhs = eta.ball_mass(x, eps) / (n * n)
            worst = max(worst, abs(lhs - rhs))
        # bitwise exactness needs 1/n**2 to be a power of two; other n
        # may set a roundoff-scale tolerance in the config
        tol = float(cfg.get("identity_tolerance", 0.0))
        report.checks.append(
            _check_le("splice-ball-identity", worst, tol, detail=f"{tested} scales")
        )
        report.tables["splice"] = {"n": n, "mass": mu.total_mass}
        return mu, None
    if kind == "oscillation_plan":
        plan = oscillation_plan_from_config(doc)
        real = constructors.realize_oscillation(plan)
        report.tables["bands"] = [_jsonable(b) for b in real.bands]
        window = (plan.blocks[-1][0], plan.blocks[0][1])
        wp = int(cfg.get("window_points", dimensions.DEFAULT_WINDOW_POINTS))
        points = int(cfg.get("points", 0)) or None
        est = pointwise_over(real.measure, plan.center, window, wp, points)
        report.tables["pointwise_envelope"] = est.to_dict()
        tol = float(cfg.get("band_tolerance", 0.2))
        for band_est, info in band_estimates(real, wp):
            report.tables.setdefault("band_slopes", []).append(
                dict(info, lower=band_est.lower, upper=band_est.upper)
            )
            # fast bands scale like the target throughout; slow bands are
            # plateau staircases, so only their lower envelope is pinned
            if info["target"] >= 1.0:
                measured = band_est.midpoint()
            else:
                measured = band_est.lower
            report.checks.append(
                _check_abs_le(
                    f"band-{info['index']}-slope-error",
                    measured - info["target"],
                    tol,
                )
            )
        return real.measure, None
    raise ValidationError(f"unknown construction kind {kind!r}", path="construction.kind")


def pointwise_over(mu, x, window, window_points, points=None):
    if points is None:
        points = max(16, int(round(20 * math.log10(window[1] / window[0]))) + 1)
    return dimensions.pointwise_exponents(
        mu, x, window, route="ball", estimator="window",
        points=points, window_points=window_points,
    )


def band_estimates(realization, window_points=5, trim=0.15, points_per_decade=20):
    """Windowed ball-route slopes inside each band, log-trimmed at the edges."""
    out = []
    for i, band in enumerate(realization.bands):
        lo, hi = band["band"]
        span = math.log10(hi / lo)
        wlo = lo * (hi / lo) ** trim
        whi = hi * (lo / hi) ** trim
        points = max(10, int(round(points_per_decade * span * (1 - 2 * trim))) + 1)
        est = dimensions.pointwise_exponents(
            realization.measure,
            realization.plan.center,
            (wlo, whi),
            route="ball",
            estimator="window",
            points=points,
            window_points=window_points,
        )
        out.append((est, {"index": i, "band": [lo, hi], "target": band["target"]}))
    return out


def slow_schedule_from_config(doc, path="construction"):
    return constructors.SlowSchedule(
        center=float(doc.get("center", 0.0)),
        j_max=int(doc.get("j_max", constructors.MAX_LADDER_LEVEL)),
        j_min=int(doc.get("j_min", 1)),
        weights=None if doc.get("weights") is None else tuple(float(w) for w in doc["weights"]),
    )


def validate_splice_schedule(schedule, n, path="construction"):
    eps1 = constructors.ladder_scale(schedule.j_min)
    if eps1 >= 1.0 / n:
        raise ValidationError(
            f"splice_state precondition violated: outermost ladder scale "
            f"exp(-2**{schedule.j_min}) = {eps1:g} >= 1/n = {1.0 / n:g}",
            path=path_join(path, "eta.j_min"),
        )


def oscillation_plan_from_config(doc, path="plan"):
    blocks = tuple(
        (float(lo), float(hi), float(s))
        for lo, hi, s in _require(doc, "blocks", path_join(path, "blocks"))
    )
    return constructors.OscillationPlan(
        blocks=blocks,
        center=float(doc.get("center", 0.0)),
        atoms_per_decade=int(doc.get("atoms_per_decade", 32)),
        mass=float(doc.get("mass", 1.0)),
    )


def run_verify_last(cfg, rng, report):
    """Numerical face of the UaH <-> power-decay theorem, both directions."""
    mu, info = measure_from_config(cfg, rng)
    report.inputs.update(info)
    alpha = float(_require(cfg, "alpha", "alpha"))
    budget = int(cfg.get("budget", DEFAULT_PAIR_BUDGET))
    series = _sample_w_from_config(mu, cfg, budget)

    # (i) UaH at alpha  =>  t^alpha W(t) stays bounded (flat trend)
    scales = [float(h) for h in _require(cfg, "uah_scales", "uah_scales")]
    uah = dimensions.uah_modulus(mu, alpha, scales)
    report.tables["uah"] = uah.to_dict()
    compensated = series.values * series.grid**alpha
    slope, _ = np.polyfit(np.log(series.grid), np.log(compensated), 1)
    tol = float(cfg.get("trend_tolerance", 0.05))
    report.checks.append(
        Check(
            name="uah-bounded-at-alpha",
            measured=uah.growth_rate,
            threshold=max(3.0 * uah.growth_stderr, 1e-6),
            relation="verdict==bounded",
            passed=(uah.verdict == "bounded-at-tested-scales"),
            detail=f"alpha={alpha:g}",
        )
    )
    report.checks.append(
        _check_abs_le("compensated-w-trend", float(slope), tol,
                      detail=f"fitted slope of t^{alpha:g} W(t)")
    )

    # (ii) observed decay alpha_hat  =>  U(alpha_hat/2)H must be bounded
    wp = int(cfg.get("window_points", dimensions.DEFAULT_WINDOW_POINTS))
    est = dimensions.envelope_slopes(series, window_points=wp)
    alpha_hat = max(0.0, -est.upper)  # conservative decay rate over the window
    half = dimensions.uah_modulus(mu, min(1.0, alpha_hat / 2.0), scales)
    report.tables["w_envelope"] = est.to_dict()
    report.tables["uah_half"] = half.to_dict()
    report.checks.append(
        Check(
            name="uah-bounded-at-half-observed-rate",
            measured=half.growth_rate,
            threshold=max(3.0 * half.growth_stderr, 1e-6),
            relation="verdict==bounded",
            passed=(half.verdict == "bounded-at-tested-scales"),
            detail=f"alpha_hat/2={alpha_hat / 2.0:g}",
        )
    )
    return mu, series


def run_verify_identities(cfg, rng, report):
    """Cross-check decay rates of W against dimension estimates."""
    mu, info = measure_from_config(cfg, rng)
    report.inputs.update(info)
    budget = int(cfg.get("budget", DEFAULT_PAIR_BUDGET))
    wp = int(cfg.get("window_points", dimensions.DEFAULT_WINDOW_POINTS))
    series = _sample_w_from_config(mu, cfg, budget)
    west = dimensions.envelope_slopes(series, window_points=wp)
    d2 = dimensions.generalized_dimension(
        mu,
        q=2.0,
        window=tuple(_require(cfg, "d2_window", "d2_window")),
        points=int(cfg.get("points", 49)),
        window_points=wp,
    )
    tol = float(cfg.get("tolerance", 0.07))
    report.tables["w_envelope"] = west.to_dict()
    report.tables["d2"] = d2.to_dict()
    report.checks.append(
        _check_abs_le("liminf-identity", (-west.upper) - d2.lower, tol,
                      detail="-(upper W slope) vs lower D(2)")
    )
    report.checks.append(
        _check_abs_le("limsup-identity", (-west.lower) - d2.upper, tol,
                      detail="-(lower W slope) vs upper D(2)")
    )
    pw = cfg.get("pointwise")
    if pw:
        x = float(_require(pw, "x", "pointwise.x"))
        window = tuple(_require(pw, "window", "pointwise.window"))
        points = int(pw.get("points", 49))
        ball = dimensions.pointwise_exponents(
            mu, x, window, route="ball", points=points, window_points=wp)
        lap = dimensions.pointwise_exponents(
            mu, x, window, route="laplace", points=points, window_points=wp)
        ptol = float(pw.get("tolerance", 0.05))
        report.tables["pointwise_ball"] = ball.to_dict()
        report.tables["pointwise_laplace"] = lap.to_dict()
        report.checks.append(
            _check_abs_le("pointwise-route-lower", ball.lower - lap.lower, ptol)
        )
        report.checks.append(
            _check_abs_le("pointwise-route-upper", ball.upper - lap.upper, ptol)
        )
    return mu, series


def run_demo_oscillation(cfg, rng, report):
    """Oscillating witness: exponent envelope + W slope span demonstration."""
    plan = oscillation_plan_from_config(_require(cfg, "plan", "plan"))
    real = constructors.realize_oscillation(plan)
    mu = real.measure
    report.tables["bands"] = [_jsonable(b) for b in real.bands]
    wp = int(cfg.get("window_points", dimensions.DEFAULT_WINDOW_POINTS))
    window = tuple(cfg.get("pointwise_window", (plan.blocks[-1][0], plan.blocks[0][1])))
    est = pointwise_over(mu, plan.center, window, wp)
    report.tables["pointwise_envelope"] = est.to_dict()
    report.checks.append(
        _check_le("exponent-envelope-lower", est.lower,
                  float(cfg.get("envelope_lower_max", 0.2)))
    )
    report.checks.append(
        _check_ge("exponent-envelope-upper", est.upper,
                  float(cfg.get("envelope_upper_min", 2.5)))
    )
    budget = int(cfg.get("budget", DEFAULT_PAIR_BUDGET))
    series = _sample_w_from_config(mu, cfg, budget)
    west = dimensions.envelope_slopes(series, window_points=wp)
    report.tables["w_envelope"] = west.to_dict()
    steep = float(cfg.get("w_steep_factor", 0.8)) * min(1.0, est.upper)
    report.checks.append(
        _check_le("w-slope-reaches-steep", west.lower, -steep,
                  detail=f"-0.8*min(1, upper exponent) = {-steep:g}")
    )
    report.checks.append(
        _check_ge("w-slope-reaches-flat", west.upper,
                  float(cfg.get("w_flat_threshold", -0.1)))
    )
    return mu, series


EXPERIMENTS = {
    "spectrum": run_spectrum,
    "dynamics": run_dynamics,
    "dims": run_dims,
    "construct": run_construct,
    "verify-last": run_verify_last,
    "verify-identities": run_verify_identities,
    "demo-oscillation": run_demo_oscillation,
}


# ----------------------------------------------------------------------
# run / validate entry points
# ----------------------------------------------------------------------


def run(config, out_dir=None, seed=None, budget=None):
    """Execute one experiment config; returns a Report.

    Deterministic given (config, seed); artifacts (report.json, CSVs)
    are written under `out_dir` when given, and only after the
    experiment completed (no partial outputs on validation errors).
    """
    if not isinstance(config, dict):
        raise ValidationError("config must be an object", path="")
    experiment = _require(config, "experiment", "experiment")
    if experiment not in EXPERIMENTS:
        raise ValidationError(
            f"unknown experiment {experiment!r} (known: {sorted(EXPERIMENTS)})",
            path="experiment",
        )
    cfg = dict(config)
    if seed is not None:
        cfg["seed"] = int(seed)
    if budget is not None:
        cfg["budget"] = int(budget)
    rng = np.random.default_rng(int(cfg.get("seed", DEFAULT_SEED)))
    report = Report(
        name=str(cfg.get("name", experiment)),
        experiment=experiment,
        inputs={"seed": int(cfg.get("seed", DEFAULT_SEED))},
    )
    t0 = time.perf_counter()
    mu, series = EXPERIMENTS[experiment](cfg, rng, report)
    report.wallclock_s = time.perf_counter() - t0
    report.resources = {
        "atoms": 0 if mu is None else len(mu),
        "pair_budget": int(cfg.get("budget", DEFAULT_PAIR_BUDGET)),
        "workers": worker_count(),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if mu is not None and not mu.is_degenerate:
            mu.to_csv(out / "measure.csv")
            report.artifacts.append("measure.csv")
        if series is not None:
            series.to_csv(out / "w_series.csv", names=("t", "W"))
            report.artifacts.append("w_series.csv")
        with open(out / "report.json", "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        report.artifacts.append("report.json")
    return report


def validate(config):
    """List every constraint violation found in a config document.

    Returns a list of (path, message); empty means valid.  Never raises
    and has no side effects.
    """
    violations = []

    def _try(fn, *args, **kwargs):
        try:
            fn(*args, **kwargs)
            return True
        except ValidationError as exc:
            violations.append((exc.path or "", exc.message))
            return False

    if not isinstance(config, dict):
        return [("", "config must be an object")]
    experiment = config.get("experiment")
    if experiment not in EXPERIMENTS:
        violations.append(("experiment", f"unknown experiment {experiment!r}"))
        return violations

    if "measure" in config:
        doc = config["measure"]
        if isinstance(doc, dict) and doc.get("kind") != "random_atoms":
            if _try(measures.spec_from_dict, doc):
                if "level" not in config:
                    violations.append(("level", "refinement level is required with a measure spec"))
    if "operator" in config:
        _try(operator_from_config, config["operator"])
    if "time_grid" in config:
        _try(_grid_config, config["time_grid"], "time_grid")
    if "plan" in config:
        _try(oscillation_plan_from_config, config["plan"])
    if "construction" in config:
        doc = config["construction"]
        kind = doc.get("kind")
        if kind == "slow_schedule":
            _try(slow_schedule_from_config, doc)
        elif kind == "splice":
            sched = None
            try:
                sched = slow_schedule_from_config(doc.get("eta", {}))
            except ValidationError as exc:
                violations.append((exc.path or "construction.eta", exc.message))
            if sched is not None and "n" in doc:
                _try(validate_splice_schedule, sched, int(doc["n"]))
        elif kind == "oscillation_plan":
            _try(oscillation_plan_from_config, doc, "construction")
        elif kind == "smooth":
            if float(doc.get("rho", 1.0)) <= 0:
                violations.append(("construction.rho", "rho must be > 0"))
        else:
            violations.append(("construction.kind", f"unknown construction kind {kind!r}"))
    for key in ("budget", "seed", "level", "points", "window_points"):
        if key in config:
            try:
                v = int(config[key])
                if key in ("budget", "points", "window_points") and v <= 0:
                    violations.append((key, "must be positive"))
            except (TypeError, ValueError):
                violations.append((key, "must be an integer"))
    return violations
