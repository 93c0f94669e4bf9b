import itertools
import math
from typing import Callable, Iterator, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import sparse
from scipy.sparse.linalg import factorized

from wavelab.handlers.utils.observability import logger
from wavelab.logic.energy import VariationalProblem
from wavelab.logic.grid import h1c_distance, half_weight, transport_diffusion_bands, weighted_l2_sq
from wavelab.logic.reaction import NodalReaction
from wavelab.logic.spectral import ground_state, lambda_c, moving_frame_eigenfunction
from wavelab.models.evolution import (
    DiagnosticSample,
    DissipationReport,
    EnvelopeReport,
    LongtimeVerdict,
    Scheme,
    SchemeConfig,
    TrajectoryDiagnostics,
    VerdictKind,
    VerdictThresholds,
)
from wavelab.models.exceptions import LinearSolveFailure, NumericalError, PreconditionUnverifiableError
from wavelab.models.grid import Grid, NodalField
from wavelab.models.reaction import ReactionField, ReactionProfile

SNAPSHOT_FRACTIONS = (0.7, 0.8, 0.9, 1.0)
# relative slack on the pointwise envelope ratio
ENVELOPE_SLACK = 1e-6


class ImexStepper:
    """Implicit transport-diffusion, explicit reaction.

    Backward Euler: (I - dt A) u^{n+1} = u^n + dt f(u^n).
    Crank-Nicolson: (I - dt/2 A) u^{n+1} = (I + dt/2 A) u^n + dt (3/2 f^n - 1/2 f^{n-1}), Euler reaction on the first step.
    The system matrix is factorised once.
    """

    def __init__(self, grid: Grid, c: float, rf: ReactionField, cfg: SchemeConfig) -> None:
        self.cfg = cfg
        self.reaction = NodalReaction(rf, grid)
        lower, main, upper = transport_diffusion_bands(grid.n - 2, grid.h, c)
        self._operator = sparse.diags([lower, main, upper], [-1, 0, 1], format='csc')
        implicit = 1.0 if cfg.scheme == Scheme.BACKWARD_EULER_IMEX else 0.5
        system = sparse.identity(grid.n - 2, format='csc') - implicit * cfg.dt * self._operator
        try:
            self._solve = factorized(system.tocsc())
        except RuntimeError as exc:
            raise LinearSolveFailure(f'transport-diffusion system is singular: {exc}') from exc
        self._previous_reaction: Optional[np.ndarray] = None
        self.clamp_count = 0

    def step(self, values: np.ndarray) -> np.ndarray:
        dt = self.cfg.dt
        interior = values[1:-1]
        reaction = self.reaction.f(values)[1:-1]
        if self.cfg.scheme == Scheme.CRANK_NICOLSON_IMEX:
            blended = reaction if self._previous_reaction is None else 1.5 * reaction - 0.5 * self._previous_reaction
            rhs = interior + 0.5 * dt * (self._operator @ interior) + dt * blended
        else:
            rhs = interior + dt * reaction
        self._previous_reaction = reaction

        new = np.zeros_like(values)
        new[1:-1] = self._solve(rhs)
        if not np.all(np.isfinite(new)):
            raise LinearSolveFailure('non-finite values after the implicit solve')
        if self.cfg.clamp_negative:
            negative = new < 0.0
            self.clamp_count += int(np.count_nonzero(negative))
            new[negative] = 0.0
        return new


def gaussian_ic(grid: Grid, amplitude: float, center: float, width: float) -> NodalField:
    if width <= 0:
        raise ValueError('width must be positive')
    z = grid.nodes
    return NodalField(grid=grid, values=amplitude * np.exp(-(((z - center) / width) ** 2)))


def imex_step(u: NodalField, c: float, rf: ReactionField, cfg: SchemeConfig) -> NodalField:
    """One step from rest (a Crank-Nicolson step uses the Euler reaction on its first step)."""
    return u.with_values(ImexStepper(u.grid, c, rf, cfg).step(np.asarray(u.values)))


def _march(stepper: ImexStepper, values: np.ndarray, steps: int) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    for k in range(1, steps + 1):
        new = stepper.step(values)
        yield k, new, values
        values = new


def evolve(
    u0: NodalField,
    c: float,
    rf: ReactionField,
    cfg: SchemeConfig,
    observer: Optional[Callable[[float, np.ndarray], None]] = None,
) -> tuple[NodalField, TrajectoryDiagnostics]:
    """March to T, sampling every ``sample_every`` steps; ``observer(t, values)`` sees each sampled state."""
    grid = u0.grid
    problem = VariationalProblem(grid, c, rf)
    weight = half_weight(grid, c)
    stepper = ImexStepper(grid, c, rf, cfg)
    steps = cfg.steps
    snapshot_steps = {int(round(fraction * steps)) for fraction in SNAPSHOT_FRACTIONS}

    def sample(t: float, values: np.ndarray, dissipation: float, cumulative: float) -> DiagnosticSample:
        if observer is not None:
            observer(t, values)
        v = weight * values
        return DiagnosticSample(
            t=t,
            P=float(np.dot(problem.quad, values)),
            E=problem.energy(v),
            dissipation=dissipation,
            sup_norm=float(np.max(np.abs(values))),
            cumulative_dissipation=cumulative,
            l2c_norm=problem.l2_norm(v),
        )

    values = np.array(u0.values, dtype=float)
    values[0] = values[-1] = 0.0
    samples = [sample(0.0, values, 0.0, 0.0)]
    snapshots: list[NodalField] = []
    snapshot_times: list[float] = []
    cumulative = 0.0
    for k, values, previous in _march(stepper, values, steps):
        rate = weight * (values - previous) / cfg.dt
        dissipation = float(np.dot(problem.quad, rate * rate))
        cumulative += cfg.dt * dissipation
        t = k * cfg.dt
        if k % cfg.sample_every == 0 or k == steps:
            samples.append(sample(t, values, dissipation, cumulative))
        if k in snapshot_steps:
            snapshots.append(NodalField(grid=grid, values=values))
            snapshot_times.append(t)

    if stepper.clamp_count:
        logger.warning('negative values clamped', extra={'c': c, 'clamp_count': stepper.clamp_count})
    diagnostics = TrajectoryDiagnostics(samples=samples, snapshots=snapshots, snapshot_times=snapshot_times, clamp_count=stepper.clamp_count)
    logger.debug('evolution finished', extra={'c': c, 'steps': steps, 'final_sup': samples[-1].sup_norm, 'final_P': samples[-1].P})
    return NodalField(grid=grid, values=values), diagnostics


def classify_longtime(diagnostics: TrajectoryDiagnostics, thresholds: Optional[VerdictThresholds] = None) -> LongtimeVerdict:
    """Extinct, Persist or Undecided from the final sup-norm and the trends over the last window."""
    thresholds = thresholds or VerdictThresholds()
    samples = diagnostics.samples
    final = samples[-1]
    window_start = final.t * (1.0 - thresholds.trend_fraction)
    window = [s for s in samples if s.t >= window_start - 1e-9]
    if len(window) < 2:
        window = samples[-2:]
    reference = window[0]
    masses = np.array([s.P for s in window])
    energy_trend = final.E - reference.E

    kind = VerdictKind.UNDECIDED
    if final.sup_norm < thresholds.extinct_sup and bool(np.all(np.diff(masses) <= 0.0)):
        kind = VerdictKind.EXTINCT
    elif (
        final.sup_norm > thresholds.persist_sup
        and abs(energy_trend) < thresholds.persist_energy_tol * max(1.0, abs(final.E))
        and abs(final.P - reference.P) <= thresholds.persist_mass_tol * abs(final.P)
    ):
        kind = VerdictKind.PERSIST
    return LongtimeVerdict(kind=kind, final_P=final.P, final_sup=final.sup_norm, energy_trend=energy_trend)


def dissipation_check(diagnostics: TrajectoryDiagnostics, rel_tol: float = 0.05, abs_tol: float = 1e-6) -> DissipationReport:
    """Compare the sampled energy drop with the accumulated ||u_t||²_{L²_c} over the sampled window."""
    samples = diagnostics.samples
    if len(samples) < 3:
        raise NumericalError('dissipation check needs at least three samples')
    first, last = samples[0], samples[-1]
    energy_drop = first.E - last.E
    dissipated = last.cumulative_dissipation - first.cumulative_dissipation
    gap = abs(energy_drop - dissipated)

    worst = 0.0
    for earlier, later in itertools.pairwise(samples):
        interval_dissipated = later.cumulative_dissipation - earlier.cumulative_dissipation
        interval_gap = abs((earlier.E - later.E) - interval_dissipated)
        worst = max(worst, interval_gap / (abs(interval_dissipated) + abs_tol))

    passes = gap <= rel_tol * abs(dissipated) + abs_tol
    if not passes:
        logger.warning('energy dissipation identity not resolved', extra={'energy_drop': energy_drop, 'dissipated': dissipated})
    return DissipationReport(
        energy_drop=energy_drop,
        dissipated=dissipated,
        relative_error=gap / max(abs(dissipated), abs_tol),
        worst_interval_error=worst,
        passes=passes,
    )


def convergence_check(snapshots: list[NodalField], c: float) -> float:
    """Largest pairwise H¹_c distance among late snapshots."""
    return max((h1c_distance(a, b, c) for a, b in itertools.combinations(snapshots, 2)), default=0.0)


def _excess_ratio(profile: ReactionProfile, lam_c: float) -> np.ndarray:
    """Coefficients of f_0(s)/s - f_0'(0) - lam_c / 2."""
    ratio = np.array(profile.coefficients[1:] or (0.0,), dtype=float)
    ratio[0] = -0.5 * lam_c
    return ratio


def _positive_crossings(ratio: np.ndarray) -> list[float]:
    trimmed = np.trim_zeros(ratio, trim='b')
    if trimmed.size <= 1:
        return []
    return sorted(r.real for r in P.polyroots(trimmed) if abs(r.imag) <= 1e-10 and r.real > 0.0)


def admissible_amplitude(profile: ReactionProfile, lam_c: float) -> float:
    """First s in (0, M] with f_0(s)/s - f_0'(0) = lam_c / 2, or M when there is none."""
    crossings = [s for s in _positive_crossings(_excess_ratio(profile, lam_c)) if s <= profile.upper_cap]
    return float(crossings[0]) if crossings else profile.upper_cap


def envelope_kappa_bound(profile: ReactionProfile, lam_c: float) -> float:
    """Largest kappa for which kappa phi_c stays where f_0(s)/s - f_0'(0) <= lam_c / 2; inf when that holds for all s > 0."""
    if not _positive_crossings(_excess_ratio(profile, lam_c)):
        return math.inf
    return admissible_amplitude(profile, lam_c)


def linear_stability_envelope(
    u0: NodalField,
    rf: ReactionField,
    c: float,
    cfg: SchemeConfig,
    thresholds: Optional[VerdictThresholds] = None,
) -> EnvelopeReport:
    """Witness extinction through u(t, z) <= kappa phi_c(z) e^{-lambda_c t / 2} at every sample time.

    kappa is the smallest constant with u0 <= kappa phi_c (phi_c max-normalised). The comparison needs lambda_c > 0
    and kappa within ``envelope_kappa_bound``; otherwise PreconditionUnverifiableError is raised.
    The L²_c form of the same bound is reported alongside.
    """
    eig = ground_state(rf, u0.grid)
    lam_c = lambda_c(eig.lambda0, c)
    if lam_c <= 0:
        raise PreconditionUnverifiableError(f'0 is not linearly stable at c={c} (lambda_c={lam_c:.4g})')

    phi_c = moving_frame_eigenfunction(eig, c).values[1:-1]
    interior = np.asarray(u0.values, dtype=float)[1:-1]
    if np.any((interior > 0.0) & (phi_c <= 0.0)):
        raise PreconditionUnverifiableError('u0 is positive where the eigenfunction vanishes')
    support = interior > 0.0
    kappa = float(np.max(interior[support] / phi_c[support])) if np.any(support) else 0.0
    kappa_max = envelope_kappa_bound(rf.profile, lam_c)
    if not math.isfinite(kappa) or kappa > kappa_max:
        raise PreconditionUnverifiableError(f'u0 <= kappa phi_c needs kappa = {kappa:.4g}, above the admissible {kappa_max:.4g}')

    worst = 0.0

    def witness(t: float, values: np.ndarray) -> None:
        nonlocal worst
        if kappa > 0.0:
            worst = max(worst, float(np.max(values[1:-1] / (kappa * phi_c))) * math.exp(0.5 * lam_c * t))

    _, diagnostics = evolve(u0, c, rf, cfg, observer=witness)
    l2_kappa = math.sqrt(weighted_l2_sq(u0, c))
    l2_worst = 0.0 if l2_kappa == 0.0 else max(s.l2c_norm / (l2_kappa * math.exp(-0.5 * lam_c * s.t)) for s in diagnostics.samples)
    verdict = classify_longtime(diagnostics, thresholds)
    report = EnvelopeReport(
        lambda_c=lam_c,
        threshold=admissible_amplitude(rf.profile, lam_c),
        kappa=kappa,
        kappa_max=kappa_max,
        holds=worst <= 1.0 + ENVELOPE_SLACK,
        worst_ratio=worst,
        l2_kappa=l2_kappa,
        l2_worst_ratio=l2_worst,
        final_sup=diagnostics.samples[-1].sup_norm,
        verdict=verdict.kind,
    )
    logger.info('linear envelope', extra={'c': c, 'lambda_c': lam_c, 'kappa': kappa, 'holds': report.holds, 'worst_ratio': worst})
    return report
