"""Experiment orchestration: rate fits, operator cross-checks, and reports.

Each experiment runs the solver (or evaluates profiles directly), reduces
the snapshots to decay series, fits the predicted rates over the final
decade, and emits an ExperimentReport with one pass/fail entry per checked
criterion. Runs that trip the boundary guard are marked inconclusive rather
than failed: a polluted domain edge invalidates the measurement, not the
claim being measured.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .hopf_cole import transform_series
from .numerics import Grid1D, heat_convolve
from .profiles import (
    ModelParams,
    PowerTailDatum,
    ProfileContext,
    V_profile,
    V_star,
    Z_leading_coefficient,
    Z_profile,
    chi,
    chi_star_cumulative,
    eta,
    eta_x,
    make_context,
    tail_limits,
    z0_datum,
)
from .solver import EvolutionResult, evolve, evolve_forced_linear

__all__ = [
    "RateSeries",
    "CriterionCheck",
    "ExperimentReport",
    "ExperimentConfig",
    "snapshot_schedule",
    "sup_diff_series",
    "fit_rate",
    "U_operator",
    "psi0_cumulative",
    "experiment_context",
    "boundary_guard",
    "theorem_1_1_experiment",
    "theorem_1_2_experiment",
    "proposition_2_1_check",
    "proposition_4_1_check",
    "proposition_5_1_check",
    "alpha2_coefficient_check",
    "write_report",
    "write_verdicts_jsonl",
]

RATE_WINDOW = (1.0e2, 1.0e3)


@dataclass
class RateSeries:
    """A decaying norm sampled in time, with fit results once fitted.

    For the pure power model the fit is least squares on log-log data and
    `exponent`/`amplitude`/`r_squared` are filled. For the power-log model
    the series times the compensation (1+t)/log(1+t) is fitted to a
    constant; `drift` reports its relative variation instead of a slope.
    """

    times: np.ndarray
    values: np.ndarray
    label: str
    model: str = "power"
    exponent: float | None = None
    amplitude: float | None = None
    r_squared: float | None = None
    drift: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.size != self.values.size:
            raise ValueError("times and values must have matching length")
        if self.times.size and (np.any(np.diff(self.times) <= 0) or self.times[0] < 1.0):
            raise ValueError("times must be strictly increasing and >= 1")
        if not (np.all(np.isfinite(self.times)) and np.all(np.isfinite(self.values))):
            raise ValueError("series must be finite")
        if np.any(self.values < 0):
            raise ValueError("values must be nonnegative")


@dataclass
class CriterionCheck:
    """One verdict line: what was measured against which tolerance."""

    id: str
    measured: float
    target: float
    tolerance: float
    verdict: str  # pass | fail | skip | inconclusive
    detail: str = ""


@dataclass
class ExperimentReport:
    title: str
    config_echo: dict[str, str]
    series: list[RateSeries] = field(default_factory=list)
    checks: list[CriterionCheck] = field(default_factory=list)
    provenance: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    inconclusive: bool = False

    def passed(self) -> bool:
        if self.inconclusive:
            return False
        return all(c.verdict in ("pass", "skip") for c in self.checks)


@dataclass
class ExperimentConfig:
    """Inputs of one theorem experiment; the default datum is the power-tail
    family A (1+x^2)^{-alpha/2} (1 + eps x (1+x^2)^{-1/2})."""

    params: ModelParams
    alpha: float
    amplitude: float = 0.1
    asymmetry: float = 0.3
    half_length: float = 400.0
    n: int = 2**14
    t_max: float = 1.0e3
    dt: float | None = None
    datum: object = None

    def make_datum(self):
        if self.datum is not None:
            return self.datum
        return PowerTailDatum(
            amplitude=self.amplitude, alpha=self.alpha, asymmetry=self.asymmetry
        )

    def echo(self) -> dict[str, str]:
        datum = self.make_datum()
        out = {
            "model.b": repr(self.params.b),
            "model.c": repr(self.params.c),
            "model.k": repr(self.params.k),
            "datum.family": type(datum).__name__,
            "datum.alpha": repr(self.alpha),
            "grid.half_length": repr(self.half_length),
            "grid.n": repr(self.n),
            "time.t_max": repr(self.t_max),
        }
        if self.datum is None:
            out["datum.amplitude"] = repr(self.amplitude)
            out["datum.asymmetry"] = repr(self.asymmetry)
        return out


def snapshot_schedule(t_max: float, window_points: int = 9) -> tuple[float, ...]:
    """Geometric early times plus a log-uniform final decade for rate fits."""
    if t_max < 10.0:
        raise ValueError("rate experiments need t_max >= 10")
    times = [0.0]
    t = 1.0
    while t < t_max / 10.0:
        times.append(t)
        t *= 2.0
    window = np.logspace(math.log10(t_max / 10.0), math.log10(t_max), window_points)
    times.extend(float(w) for w in window)
    return tuple(sorted(set(times)))


def sup_diff_series(result: EvolutionResult, reference, label: str) -> RateSeries:
    """Sup over the interior 80% of |snapshot - reference(x, t)| for t >= 1."""
    if not result.states:
        raise ValueError("no snapshots to reduce")
    inner = result.grid.interior_mask(0.8)
    x = result.grid.x[inner]
    times, values = [], []
    for snap in result.states:
        if snap.time < 1.0:
            continue
        ref = np.asarray(reference(x, snap.time))
        values.append(float(np.max(np.abs(snap.field.values[inner] - ref))))
        times.append(snap.time)
    return RateSeries(np.asarray(times), np.asarray(values), label)


def fit_rate(
    series: RateSeries,
    model: str = "power",
    window: tuple[float, float] = RATE_WINDOW,
    min_samples: int = 6,
    min_decades: float = 1.0,
) -> RateSeries:
    """Least-squares fit on the window; returns a new, fitted series.

    power: slope and amplitude of log v = log A + p log t, with R^2.
    power-log: v (1+t)/log(1+t) fitted to a constant; drift is its
    relative spread (max-min)/mean and R^2 is computed in log space
    against the t^{-1} log t model.
    """
    mask = (series.times >= window[0]) & (series.times <= window[1])
    t = series.times[mask]
    v = series.values[mask]
    if t.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples in the window, got {t.size}")
    span = math.log10(t[-1] / t[0])
    if span < min_decades - 1e-9:
        raise ValueError(f"window spans {span:.2f} decades, need {min_decades}")
    if np.any(v <= 0):
        raise ValueError("rate fit needs positive values")
    logt, logv = np.log(t), np.log(v)
    if model == "power":
        slope, intercept = np.polyfit(logt, logv, 1)
        fitted = slope * logt + intercept
        ss_res = float(np.sum((logv - fitted) ** 2))
        ss_tot = float(np.sum((logv - np.mean(logv)) ** 2))
        r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-28 else 1.0 - ss_res / max(ss_tot, 1e-300)
        return RateSeries(
            series.times, series.values, series.label, model="power",
            exponent=float(slope), amplitude=float(math.exp(intercept)),
            r_squared=float(r2), drift=None,
        )
    if model == "power-log":
        comp = v * (1.0 + t) / np.log(1.0 + t)
        amp = float(np.mean(comp))
        drift = float((np.max(comp) - np.min(comp)) / amp)
        model_logv = math.log(amp) + np.log(np.log(1.0 + t) / (1.0 + t))
        ss_res = float(np.sum((logv - model_logv) ** 2))
        ss_tot = float(np.sum((logv - np.mean(logv)) ** 2))
        r2 = 1.0 - ss_res / max(ss_tot, 1e-300)
        return RateSeries(
            series.times, series.values, series.label, model="power-log",
            exponent=None, amplitude=amp, r_squared=float(r2), drift=drift,
        )
    raise ValueError(f"unknown rate model {model!r}")


# ---------------------------------------------------------------------------
# heat-propagator operator acting on an antiderivative
# ---------------------------------------------------------------------------


def U_operator(cumulative_h, t: float, tau: float, ctx: ProfileContext, targets, tol: float = 1e-7):
    """Evaluate x -> integral of d/dx[G(x-y, t-tau) eta(x, t)] q(y) dy.

    Here q(y) = eta(y, tau)^{-1} * cumulative_h(y) and cumulative_h is the
    running integral of the perturbation h. Each target carries quadrature
    error at most tol.
    """
    if not 0.0 <= tau < t:
        raise ValueError(f"need 0 <= tau < t, got tau={tau}, t={t}")
    xs = np.atleast_1d(np.asarray(targets, dtype=np.float64))

    def q(y):
        return np.asarray(cumulative_h(y)) / np.asarray(eta(y, tau, ctx))

    eta_t = np.asarray(eta(xs, t, ctx))
    etax_t = np.asarray(eta_x(xs, t, ctx))
    scale = max(1.0, float(np.max(np.abs(eta_t))), float(np.max(np.abs(etax_t))))
    part = heat_convolve(q, t - tau, xs, deriv=1, tol=tol / (2.0 * scale))
    base = heat_convolve(q, t - tau, xs, deriv=0, tol=tol / (2.0 * scale))
    return eta_t * part + etax_t * base


def psi0_cumulative(u0, ctx: ProfileContext):
    """Antiderivative of the initial perturbation u0 - chi_*."""
    b, delta = ctx.params.b, ctx.delta

    def cum(y):
        return np.asarray(u0.cumulative(y)) - np.asarray(chi_star_cumulative(y, b, delta))

    return cum


def experiment_context(u0, params: ModelParams, alpha: float, delta: float,
                       tail_half_length: float = 800.0) -> ProfileContext:
    """Profile context for a run: the supplied (windowed) mass plus tail
    limits extrapolated from the unwindowed datum's antiderivative.

    The tail limits are normalized with the datum's own exact mass: with any
    other mass the shifted tail function picks up a constant offset and the
    weighted limits do not exist. The supplied delta (the run's windowed
    mass, which is what the solution actually carries) enters only the
    returned context's wave and weight evaluations.
    """
    base = make_context(params, alpha, float(u0.mass()))
    limits = tail_limits(lambda y: np.asarray(z0_datum(u0, base, y)), alpha, tail_half_length)
    return make_context(params, alpha, delta, c_plus=limits.c_plus, c_minus=limits.c_minus)


# ---------------------------------------------------------------------------
# boundary guard
# ---------------------------------------------------------------------------


def boundary_guard(result: EvolutionResult, ctx: ProfileContext | None = None,
                   margin: float = 3.0) -> tuple[bool, str]:
    """Check that the outer 10% of the domain holds nothing beyond the
    datum's own tail and the wave's tail.

    The raw threshold 1e-6 * sup-norm alone would be tripped by the datum's
    legitimate slowly decaying tail, so the guard allows the analytic
    envelope: the initial boundary content (the tail barely moves over
    t << L^2) plus the wave level in the outer region, with a fixed margin
    for diffusive spread. Anything above that is wrapped radiation and
    invalidates the run.
    """
    d = result.diagnostics
    env_datum = float(d["boundary_norm"][0])
    wave = 0.0
    if ctx is not None and ctx.delta != 0.0:
        outer = ~result.grid.interior_mask(0.9)
        x_out = result.grid.x[outer]
        t_end = float(d["t"][-1])
        wave = float(np.max(np.abs(np.asarray(chi(x_out, t_end, ctx)))))
    allowed = 1e-6 * d["sup_norm"] + margin * (env_datum + wave) + 1e-14
    bad = d["boundary_norm"] > allowed
    if not np.any(bad):
        worst = float(np.max(d["boundary_norm"] - allowed))
        return True, f"boundary clear, worst margin {worst:.3e}"
    t_bad = float(d["t"][np.argmax(bad)])
    return False, (
        f"boundary norm {float(np.max(d['boundary_norm'][bad])):.3e} exceeds "
        f"allowance from t = {t_bad:g}; run invalidated"
    )


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _mass_check(result: EvolutionResult) -> CriterionCheck:
    drift = result.mass_drift()
    return CriterionCheck(
        id="criterion-5",
        measured=drift,
        target=0.0,
        tolerance=1e-8,
        verdict="pass" if drift <= 1e-8 else "fail",
        detail="relative mass drift over the run",
    )


def _run_and_context(config: ExperimentConfig, result: EvolutionResult | None):
    datum = config.make_datum()
    grid = Grid1D(config.half_length, config.n)
    if result is None:
        times = snapshot_schedule(config.t_max)
        result = evolve(datum, config.params, grid=grid, snapshot_times=times, dt=config.dt)
    ctx = experiment_context(datum, config.params, config.alpha, result.delta)
    return datum, result, ctx


def _provenance(result: EvolutionResult, window) -> dict[str, str]:
    return {
        "grid.half_length": repr(float(result.grid.half_length)),
        "grid.n": repr(result.grid.n),
        "dt.initial": repr(float(result.states[0].dt)) if result.states else "nan",
        "dt.doubled_at": repr(result.doubled_at) if result.doubled_at else "never",
        "window.low": repr(float(window[0])),
        "window.high": repr(float(window[1])),
        "delta.windowed": repr(float(result.delta)),
    }


def _log_variation(times, values, weight) -> float:
    comp = values * weight(times)
    return float((np.max(comp) - np.min(comp)) / np.mean(comp))


def theorem_1_1_experiment(
    config: ExperimentConfig,
    result: EvolutionResult | None = None,
    include_transform: bool = True,
) -> ExperimentReport:
    """First-order convergence to the diffusion wave at the predicted rate.

    For 1 < alpha < 2 the sup distance to chi must decay like t^{-alpha/2}
    (slope within 0.1, R^2 >= 0.98 on the final decade); at alpha = 2 the
    compensated ratio sup * (1+t)/log(2+t) must flatten to within 25%.
    The same run checks mass conservation and, optionally, the transformed
    distance w of the exponential change of variables.
    """
    datum, result, ctx = _run_and_context(config, result)
    window = (config.t_max / 10.0, config.t_max)
    report = ExperimentReport(
        title=f"theorem-1-1 alpha={config.alpha:g}",
        config_echo=config.echo(),
        provenance=_provenance(result, window),
    )
    ok, detail = boundary_guard(result, ctx)
    if not ok:
        report.inconclusive = True
        report.notes.append(detail)
        return report
    report.notes.append(detail)

    report.checks.append(_mass_check(result))
    series = sup_diff_series(result, lambda x, t: np.asarray(chi(x, t, ctx)), "sup|u-chi|")
    alpha = config.alpha
    if alpha < 2.0:
        fit = fit_rate(series, "power", window)
        report.series.append(fit)
        dev = abs(fit.exponent + alpha / 2.0)
        verdict = "pass" if dev <= 0.1 and fit.r_squared >= 0.98 else "fail"
        report.checks.append(CriterionCheck(
            id="criterion-7", measured=fit.exponent, target=-alpha / 2.0, tolerance=0.1,
            verdict=verdict, detail=f"R^2={fit.r_squared:.6f} (needs >= 0.98)",
        ))
    else:
        mask = (series.times >= window[0]) & (series.times <= window[1])
        variation = _log_variation(
            series.times[mask], series.values[mask],
            lambda t: (1.0 + t) / np.log(2.0 + t),
        )
        fit = fit_rate(series, "power-log", window)
        report.series.append(fit)
        report.checks.append(CriterionCheck(
            id="criterion-7", measured=variation, target=0.0, tolerance=0.25,
            verdict="pass" if variation < 0.25 else "fail",
            detail="variation of sup|u-chi| (1+t)/log(2+t) over the final decade",
        ))
        # both models, residual ratio: below 2x no winner is declared
        power = fit_rate(series, "power", window)
        ratio = (1.0 - power.r_squared + 1e-300) / (1.0 - fit.r_squared + 1e-300)
        report.notes.append(
            f"log-residual ratio power/power-log = {ratio:.3g}"
            + ("" if ratio >= 2.0 or ratio <= 0.5 else " (below 2x: models not separated)")
        )

    if include_transform:
        rows = [r for r in transform_series(result, ctx) if r["t"] >= 1.0]
        w_series = RateSeries(
            np.asarray([r["t"] for r in rows]),
            np.asarray([r["w_sup"] for r in rows]),
            "sup|w|",
        )
        recon = max(r["recon_residual"] for r in rows)
        report.checks.append(CriterionCheck(
            id="criterion-13-reconstruction", measured=recon, target=0.0, tolerance=1e-6,
            verdict="pass" if recon <= 1e-6 else "fail",
            detail="sup of reconstruction identity vs direct subtraction, all snapshots",
        ))
        if alpha < 2.0:
            w_fit = fit_rate(w_series, "power", window)
            report.series.append(w_fit)
            dev = abs(w_fit.exponent + (alpha - 1.0) / 2.0)
            report.checks.append(CriterionCheck(
                id="criterion-13-w-rate", measured=w_fit.exponent,
                target=-(alpha - 1.0) / 2.0, tolerance=0.1,
                verdict="pass" if dev <= 0.1 else "fail",
                detail=f"R^2={w_fit.r_squared:.6f}",
            ))
        else:
            mask = (w_series.times >= window[0]) & (w_series.times <= window[1])
            variation = _log_variation(
                w_series.times[mask], w_series.values[mask],
                lambda t: np.sqrt(1.0 + t) / np.log(2.0 + t),
            )
            report.series.append(w_series)
            report.checks.append(CriterionCheck(
                id="criterion-13-w-rate", measured=variation, target=0.0, tolerance=0.25,
                verdict="pass" if variation < 0.25 else "fail",
                detail="variation of sup|w| sqrt(1+t)/log(2+t) over the final decade",
            ))
    return report


def theorem_1_2_experiment(
    config: ExperimentConfig,
    result: EvolutionResult | None = None,
    second_order_times: tuple[float, ...] = (10.0, 100.0, 316.0, 1000.0),
) -> ExperimentReport:
    """Second-order expansion: subtracting the tail profile must improve the
    weighted distance, and the leading coefficient controls a lower bound.

    For 1 < alpha < 2: (1+t)^{alpha/2} sup|u - chi - Z| at the final time
    must be at most half its value at t = 10; the weighted first-order
    distance must stay above half the leading Z coefficient (optimality)
    and agree with it in sign. At alpha = 2 the same series uses Z + V and
    the (1+t)/log(1+t) weight, reported as a trend.
    """
    datum, result, ctx = _run_and_context(config, result)
    window = (config.t_max / 10.0, config.t_max)
    report = ExperimentReport(
        title=f"theorem-1-2 alpha={config.alpha:g}",
        config_echo=config.echo(),
        provenance=_provenance(result, window),
    )
    ok, detail = boundary_guard(result, ctx)
    if not ok:
        report.inconclusive = True
        report.notes.append(detail)
        return report
    report.notes.append(detail)
    report.checks.append(_mass_check(result))

    alpha = config.alpha
    inner = result.grid.interior_mask(0.8)
    x_in = result.grid.x[inner]
    times = [t for t in second_order_times if t <= config.t_max]
    weighted = []
    for t in times:
        snap = result.snapshot(t)
        diff = snap.field.values[inner] - np.asarray(chi(x_in, t, ctx))
        diff -= np.asarray(Z_profile(x_in, t, ctx))
        if alpha == 2.0:
            diff -= np.asarray(V_profile(x_in, t, ctx))
            weight = (1.0 + t) / math.log(1.0 + t)
        else:
            weight = (1.0 + t) ** (alpha / 2.0)
        weighted.append(float(np.max(np.abs(diff))) * weight)
    label = "weighted sup|u-chi-Z|" + ("-V| (log weight)" if alpha == 2.0 else "|")
    report.series.append(RateSeries(np.asarray(times), np.asarray(weighted), label))
    ratio = weighted[-1] / weighted[0]
    report.checks.append(CriterionCheck(
        id="criterion-8", measured=ratio, target=0.0, tolerance=0.5,
        verdict="pass" if ratio <= 0.5 else "fail",
        detail=f"weighted second-order distance, t={times[-1]:g} vs t={times[0]:g}",
    ))

    z_lead = Z_leading_coefficient(ctx) if alpha < 2.0 else float("nan")
    if alpha < 2.0 and abs(ctx.beta0 if ctx.beta0 is not None else 0.0) < 1e-6:
        report.checks.append(CriterionCheck(
            id="optimality-lower-bound", measured=0.0, target=0.0, tolerance=0.0,
            verdict="skip", detail="|beta0| < 1e-6: lower bound vacuous, check skipped",
        ))
    elif alpha < 2.0:
        low = []
        for t in times:
            if t < window[0]:
                continue
            snap = result.snapshot(t)
            diff = snap.field.values[inner] - np.asarray(chi(x_in, t, ctx))
            low.append(float(np.max(np.abs(diff))) * t ** (alpha / 2.0))
        worst = min(low)
        report.checks.append(CriterionCheck(
            id="optimality-lower-bound", measured=worst, target=abs(z_lead), tolerance=0.5,
            verdict="pass" if worst >= 0.5 * abs(z_lead) else "fail",
            detail="t^{alpha/2} sup|u-chi| vs |leading Z coefficient| on the final decade",
        ))
        # sign consistency at the origin, where the leading term dominates
        t_end = times[-1]
        snap = result.snapshot(t_end)
        j0 = int(np.argmin(np.abs(result.grid.x)))
        center = float(snap.field.values[j0] - np.asarray(chi(result.grid.x[j0], t_end, ctx)))
        agree = math.copysign(1.0, center) == math.copysign(1.0, z_lead)
        report.checks.append(CriterionCheck(
            id="corollary-sign", measured=center, target=z_lead, tolerance=0.0,
            verdict="pass" if agree else "fail",
            detail=f"(u-chi)(0, {t_end:g}) sign vs leading Z coefficient sign",
        ))
    return report


def proposition_2_1_check(
    result: EvolutionResult,
    window: tuple[float, float] = RATE_WINDOW,
) -> ExperimentReport:
    """Derivative decay of the solution itself: L2 slopes near -1/4 - l/2
    and sup slopes near -1/2 - l/2 for l in {0, 1}."""
    from .numerics import spectral_derivative

    report = ExperimentReport(title="proposition-2-1", config_echo={})
    inner = result.grid.interior_mask(0.8)
    times = [s.time for s in result.states if s.time >= 1.0]
    if not times:
        raise ValueError("no snapshots at t >= 1")
    for el in (0, 1):
        sup_vals, l2_vals = [], []
        for snap in result.states:
            if snap.time < 1.0:
                continue
            fld = snap.field if el == 0 else spectral_derivative(snap.field, el)
            sup_vals.append(float(np.max(np.abs(fld.values[inner]))))
            l2_vals.append(float(np.sqrt(np.sum(fld.values[inner] ** 2) * result.grid.dx)))
        for tag, vals, target in (
            ("sup", sup_vals, -0.5 - el / 2.0),
            ("l2", l2_vals, -0.25 - el / 2.0),
        ):
            fit = fit_rate(RateSeries(np.asarray(times), np.asarray(vals),
                                      f"|d^{el} u|_{tag}"), "power", window)
            report.series.append(fit)
            dev = abs(fit.exponent - target)
            report.checks.append(CriterionCheck(
                id=f"derivative-decay-{tag}-l{el}", measured=fit.exponent,
                target=target, tolerance=0.1,
                verdict="pass" if dev <= 0.1 else "fail",
                detail=f"R^2={fit.r_squared:.6f}",
            ))
    return report


def proposition_4_1_check(
    u0,
    params: ModelParams,
    alpha: float,
    delta: float,
    times: tuple[float, ...] = (10.0, 100.0, 1000.0),
    tol: float = 1e-7,
) -> ExperimentReport:
    """Quadrature-only: the propagated initial perturbation converges to the
    tail profile in the (1+t)^{alpha/2} weight, measured at x in {0, +-sqrt t}."""
    ctx = experiment_context(u0, params, alpha, delta)
    cum = psi0_cumulative(u0, ctx)
    report = ExperimentReport(
        title=f"proposition-4-1 alpha={alpha:g}",
        config_echo={"datum.family": type(u0).__name__, "datum.alpha": repr(alpha),
                     "delta": repr(delta)},
    )
    gaps = []
    for t in times:
        targets = np.array([-math.sqrt(t), 0.0, math.sqrt(t)])
        u_vals = U_operator(cum, t, 0.0, ctx, targets, tol=tol)
        z_vals = np.asarray(Z_profile(targets, t, ctx, tol=tol))
        gaps.append(float(np.max(np.abs(u_vals - z_vals))) * (1.0 + t) ** (alpha / 2.0))
    report.series.append(RateSeries(np.asarray(times), np.asarray(gaps),
                                    "weighted sup|U[psi0]-Z| at {0, +-sqrt t}"))
    ratio = gaps[-1] / gaps[0]
    report.checks.append(CriterionCheck(
        id="criterion-9", measured=ratio, target=0.0, tolerance=0.5,
        verdict="pass" if ratio <= 0.5 else "fail",
        detail=f"decrease of the weighted gap from t={times[0]:g} to t={times[-1]:g}",
    ))
    return report


def proposition_5_1_check(
    params: ModelParams,
    delta: float,
    grid: Grid1D,
    t_max: float = 1.0e3,
    dt: float | None = None,
) -> ExperimentReport:
    """Forced linear run against the closed-form log-correction profile:
    (1+t) sup|v - V| must show no upward trend on [10, t_max]."""
    ctx = make_context(params, 2.0, delta)
    times = snapshot_schedule(t_max)
    result = evolve_forced_linear(params, ctx, grid, snapshot_times=times, dt=dt)
    report = ExperimentReport(
        title="proposition-5-1",
        config_echo={"model.b": repr(params.b), "model.c": repr(params.c),
                     "model.k": repr(params.k), "delta": repr(delta),
                     "grid.half_length": repr(float(grid.half_length)),
                     "grid.n": repr(grid.n), "time.t_max": repr(t_max)},
        provenance=_provenance(result, (10.0, t_max)),
    )
    inner = grid.interior_mask(0.8)
    x_in = grid.x[inner]
    ts, resid = [], []
    for snap in result.states:
        if snap.time < 10.0:
            continue
        v_ref = np.asarray(V_profile(x_in, snap.time, ctx))
        resid.append((1.0 + snap.time) * float(np.max(np.abs(snap.field.values[inner] - v_ref))))
        ts.append(snap.time)
    series = RateSeries(np.asarray(ts), np.asarray(resid), "(1+t) sup|v-V|")
    report.series.append(series)
    slope = float(np.polyfit(np.log1p(series.times), np.log(series.values), 1)[0])
    report.checks.append(CriterionCheck(
        id="criterion-12", measured=slope, target=0.0, tolerance=0.05,
        verdict="pass" if slope <= 0.05 else "fail",
        detail="log-log slope of the weighted residual; bounded means no upward trend",
    ))
    return report


def alpha2_coefficient_check(
    ctx: ProfileContext,
    times: tuple[float, ...] = (1.0e3, 1.0e4),
    s_span: float = 10.0,
    n_s: int = 201,
) -> ExperimentReport:
    """Profile-only check of the log-term coefficient at alpha = 2.

    The log parts of Z and V share the similarity shape V_*, so
    Z + V ~ beta1 V_*(x / sqrt(1+t)) log(1+t) / ((1+t) 4 sqrt(pi)). Two
    normalizations are checked to within 20%: the sup over the similarity
    window against |beta1| |V_*|_inf / (4 sqrt pi), and the origin value
    against |b| chi_*(0) eta_*(0) |beta1| / (4 sqrt pi), which is the same
    constant with |V_*|_inf replaced by V_*(0) = b chi_*(0) eta_*(0) and is
    the lower-bound coefficient the asymptotics are stated with.
    """
    if ctx.alpha != 2.0:
        raise ValueError("the log-coefficient check is an alpha = 2 statement")
    s_fine = np.linspace(-s_span, s_span, 6001)
    sup_vstar = float(np.max(np.abs(np.asarray(V_star(s_fine, ctx)))))
    pred_sup = abs(ctx.beta1) * sup_vstar / (4.0 * math.sqrt(math.pi))
    pred_origin = (
        abs(ctx.params.b) * ctx.chi_star_0 * ctx.eta_star_0 * abs(ctx.beta1)
        / (4.0 * math.sqrt(math.pi))
    )
    report = ExperimentReport(
        title="alpha-2 log coefficient",
        config_echo={"delta": repr(ctx.delta), "beta1": repr(ctx.beta1),
                     "predicted.sup": repr(pred_sup),
                     "predicted.origin": repr(pred_origin)},
    )
    if abs(ctx.beta1) < 1e-6:
        report.checks.append(CriterionCheck(
            id="criterion-11", measured=0.0, target=pred_sup, tolerance=0.2,
            verdict="skip", detail="|beta1| < 1e-6: log term degenerate, check skipped",
        ))
        return report
    s = np.linspace(-s_span, s_span, n_s)
    sup_ratios, origin_ratios = [], []
    for t in times:
        weight = (1.0 + t) / math.log(1.0 + t)
        xs = s * math.sqrt(1.0 + t)
        vals = np.asarray(Z_profile(xs, t, ctx)) + np.asarray(V_profile(xs, t, ctx))
        sup_ratios.append(float(np.max(np.abs(vals))) * weight / pred_sup)
        origin = np.asarray(Z_profile(np.array([0.0]), t, ctx))[0] \
            + np.asarray(V_profile(np.array([0.0]), t, ctx))[0]
        origin_ratios.append(abs(float(origin)) * weight / pred_origin)
    report.series.append(RateSeries(np.asarray(times), np.asarray(sup_ratios),
                                    "measured/predicted sup log coefficient"))
    report.series.append(RateSeries(np.asarray(times), np.asarray(origin_ratios),
                                    "measured/predicted origin log coefficient"))
    worst_sup = max(abs(r - 1.0) for r in sup_ratios)
    worst_origin = max(abs(r - 1.0) for r in origin_ratios)
    report.checks.append(CriterionCheck(
        id="criterion-11", measured=worst_sup, target=0.0, tolerance=0.2,
        verdict="pass" if worst_sup <= 0.2 else "fail",
        detail=f"sup|Z+V| weight deviation from |beta1| |V_*|_inf/(4 sqrt pi) = {pred_sup:.8g}",
    ))
    report.checks.append(CriterionCheck(
        id="criterion-11-origin", measured=worst_origin, target=0.0, tolerance=0.2,
        verdict="pass" if worst_origin <= 0.2 else "fail",
        detail=f"|Z+V|(0,t) weight deviation from lower-bound coefficient {pred_origin:.8g}",
    ))
    return report


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------


def write_report(path, report: ExperimentReport) -> None:
    """Structured text: key=value header blocks plus CSV series sections."""
    with open(path, "w") as fh:
        fh.write(f"title={report.title}\n")
        fh.write(f"inconclusive={report.inconclusive}\n")
        fh.write(f"passed={report.passed()}\n")
        fh.write("[config]\n")
        for key in sorted(report.config_echo):
            fh.write(f"{key}={report.config_echo[key]}\n")
        if report.provenance:
            fh.write("[provenance]\n")
            for key in sorted(report.provenance):
                fh.write(f"{key}={report.provenance[key]}\n")
        if report.notes:
            fh.write("[notes]\n")
            for note in report.notes:
                fh.write(f"{note}\n")
        fh.write("[checks]\n")
        fh.write("id,verdict,measured,target,tolerance,detail\n")
        for c in report.checks:
            fh.write(f"{c.id},{c.verdict},{c.measured!r},{c.target!r},{c.tolerance!r},"
                     f"\"{c.detail}\"\n")
        for s in report.series:
            fh.write(f"[series {s.label}]\n")
            fh.write(f"model={s.model}\n")
            if s.exponent is not None:
                fh.write(f"exponent={s.exponent!r}\n")
            if s.amplitude is not None:
                fh.write(f"amplitude={s.amplitude!r}\n")
            if s.r_squared is not None:
                fh.write(f"r_squared={s.r_squared!r}\n")
            if s.drift is not None:
                fh.write(f"drift={s.drift!r}\n")
            fh.write("t,value\n")
            for t, v in zip(s.times, s.values):
                fh.write(f"{float(t)!r},{float(v)!r}\n")


def write_verdicts_jsonl(path, report: ExperimentReport) -> None:
    """Machine-readable verdicts: one JSON object per checked criterion."""
    with open(path, "w") as fh:
        for c in report.checks:
            fh.write(json.dumps(
                {"id": c.id, "measured": c.measured, "target": c.target,
                 "tolerance": c.tolerance, "verdict": c.verdict},
                sort_keys=True,
            ) + "\n")
