import math

import numpy as np
import pytest
from pydantic import ValidationError

from tests.utils import bistable_setup, build_field, kpp_setup
from wavelab.logic.evolution import (
    ImexStepper,
    admissible_amplitude,
    classify_longtime,
    convergence_check,
    dissipation_check,
    envelope_kappa_bound,
    evolve,
    gaussian_ic,
    imex_step,
    linear_stability_envelope,
)
from wavelab.logic.grid import make_grid, zero_field
from wavelab.logic.reaction import bistable_profile, kpp_profile, monostable_profile
from wavelab.models.evolution import DiagnosticSample, Scheme, SchemeConfig, TrajectoryDiagnostics, VerdictKind, VerdictThresholds
from wavelab.models.exceptions import NumericalError, PreconditionUnverifiableError


def _diagnostics(times, sup, mass, energies, cumulative=None) -> TrajectoryDiagnostics:
    cumulative = cumulative if cumulative is not None else [0.0] * len(times)
    samples = [
        DiagnosticSample(t=t, P=p, E=e, dissipation=0.0, sup_norm=s, cumulative_dissipation=d)
        for t, s, p, e, d in zip(times, sup, mass, energies, cumulative)
    ]
    return TrajectoryDiagnostics(samples=samples)


def test_gaussian_ic():
    # Given: unit amplitude and width 30 on the default grid
    grid = make_grid(300.0, 0.1)
    u = gaussian_ic(grid, 1.0, 0.0, 30.0)
    assert u.values[np.argmin(np.abs(grid.nodes))] == pytest.approx(1.0)
    assert gaussian_ic(grid, 0.0, 0.0, 30.0).sup_norm == 0.0
    with pytest.raises(ValueError):
        gaussian_ic(grid, 1.0, 0.0, 0.0)


def test_scheme_config_validation():
    # Given: a step longer than the horizon
    with pytest.raises(ValidationError):
        SchemeConfig(dt=2.0, T=1.0)
    assert SchemeConfig(dt=0.1, T=150.0).steps == 1500


def test_step_of_zero_is_zero():
    # Given: the zero field and both schemes
    rf, grid = kpp_setup()
    for scheme in Scheme:
        new = imex_step(zero_field(grid), 0.5, rf, SchemeConfig(scheme=scheme))
        assert new.sup_norm == 0.0


def test_pure_decay_contracts_sup_norm():
    # Given: an empty patch, so f = -delta u everywhere
    rf = build_field(kpp_profile(), width=0.0, delta=1.0)
    grid = make_grid(40.0, 0.1, rf)
    cfg = SchemeConfig(dt=0.01, T=1.0)
    stepper = ImexStepper(grid, 0.5, rf, cfg)
    values = np.asarray(gaussian_ic(grid, 1.0, 0.0, 3.0).values, dtype=float)
    for _ in range(20):
        new = stepper.step(values)
        assert np.max(np.abs(new)) <= math.exp(-0.9 * rf.delta * cfg.dt) * np.max(np.abs(values))
        values = new


def test_step_clamps_and_counts_negative_values():
    # Given: a field with a negative dip
    rf, grid = kpp_setup()
    values = np.zeros(grid.n)
    values[grid.n // 2] = -1.0
    stepper = ImexStepper(grid, 0.0, rf, SchemeConfig(dt=0.1, T=1.0))
    new = stepper.step(values)
    assert float(np.min(new)) == 0.0
    assert stepper.clamp_count > 0


def test_step_without_clamp_keeps_sign():
    # Given: the same dip with clamping disabled
    rf, grid = kpp_setup()
    values = np.zeros(grid.n)
    values[grid.n // 2] = -1.0
    stepper = ImexStepper(grid, 0.0, rf, SchemeConfig(dt=0.1, T=1.0, clamp_negative=False))
    assert float(np.min(stepper.step(values))) < 0.0
    assert stepper.clamp_count == 0


def test_evolve_zero_stays_zero():
    # Given: the zero datum
    rf, grid = kpp_setup()
    final, diagnostics = evolve(zero_field(grid), 0.5, rf, SchemeConfig(dt=0.1, T=2.0, sample_every=5))
    assert final.sup_norm == 0.0
    assert all(sample.P == 0.0 and sample.E == 0.0 for sample in diagnostics.samples)
    assert [sample.t for sample in diagnostics.samples] == pytest.approx([0.0, 0.5, 1.0, 1.5, 2.0])


def test_evolve_records_snapshots_and_final_sample():
    # Given: a horizon that is not a multiple of the sampling stride
    rf, grid = kpp_setup()
    _, diagnostics = evolve(gaussian_ic(grid, 0.5, 0.0, 5.0), 0.5, rf, SchemeConfig(dt=0.1, T=2.3, sample_every=10))
    times = [sample.t for sample in diagnostics.samples]
    assert times[-1] == pytest.approx(2.3)
    assert diagnostics.snapshot_times == pytest.approx([1.6, 1.8, 2.1, 2.3])
    assert len(diagnostics.snapshots) == 4
    assert all(sample.P >= 0.0 for sample in diagnostics.samples)


def test_classify_extinct():
    # Given: a decaying trajectory below the extinction threshold
    times = np.linspace(0.0, 100.0, 11)
    verdict = classify_longtime(_diagnostics(times, 1e-4 * np.exp(-times), 1e-3 * np.exp(-times), np.zeros(11)))
    assert verdict.kind == VerdictKind.EXTINCT


def test_classify_persist():
    # Given: a trajectory that settled at sup 0.9
    times = np.linspace(0.0, 100.0, 11)
    verdict = classify_longtime(_diagnostics(times, np.full(11, 0.9), np.full(11, 20.0), np.full(11, -3.0)))
    assert verdict.kind == VerdictKind.PERSIST
    assert verdict.energy_trend == 0.0


def test_classify_undecided_when_energy_still_moves():
    # Given: a sup above the persistence threshold but a drifting energy
    times = np.linspace(0.0, 100.0, 11)
    verdict = classify_longtime(_diagnostics(times, np.full(11, 0.5), np.full(11, 10.0), -np.linspace(0.0, 1.0, 11)))
    assert verdict.kind == VerdictKind.UNDECIDED


def test_classify_undecided_when_mass_still_moves():
    # Given: a stable energy but a growing mass
    times = np.linspace(0.0, 100.0, 11)
    verdict = classify_longtime(_diagnostics(times, np.full(11, 0.5), np.linspace(1.0, 2.0, 11), np.full(11, -1.0)))
    assert verdict.kind == VerdictKind.UNDECIDED


def test_classify_small_but_growing_is_not_extinct():
    # Given: sup below the extinction threshold with growing mass
    times = np.linspace(0.0, 100.0, 11)
    verdict = classify_longtime(_diagnostics(times, np.full(11, 5e-4), np.linspace(1e-4, 2e-4, 11), np.zeros(11)))
    assert verdict.kind == VerdictKind.UNDECIDED


def test_classify_uses_custom_thresholds():
    # Given: an extinction threshold raised above the final sup
    times = np.linspace(0.0, 100.0, 11)
    diagnostics = _diagnostics(times, np.full(11, 5e-3), np.full(11, 1e-2), np.zeros(11))
    assert classify_longtime(diagnostics).kind == VerdictKind.UNDECIDED
    assert classify_longtime(diagnostics, VerdictThresholds(extinct_sup=1e-2, persist_sup=0.1)).kind == VerdictKind.EXTINCT


def test_dissipation_check_needs_three_samples():
    # Given: two samples only
    with pytest.raises(NumericalError):
        dissipation_check(_diagnostics([0.0, 1.0], [1.0, 1.0], [1.0, 1.0], [0.0, 0.0]))


def test_dissipation_check_on_balanced_record():
    # Given: an energy drop equal to the accumulated dissipation
    diagnostics = _diagnostics([0.0, 1.0, 2.0], [1.0] * 3, [1.0] * 3, [0.0, -1.0, -1.5], [0.0, 1.0, 1.5])
    report = dissipation_check(diagnostics)
    assert report.passes
    assert report.energy_drop == pytest.approx(1.5)
    assert report.relative_error == pytest.approx(0.0, abs=1e-12)


def test_dissipation_check_flags_imbalance():
    # Given: energy falling twice as fast as the dissipation accounts for
    diagnostics = _diagnostics([0.0, 1.0, 2.0], [1.0] * 3, [1.0] * 3, [0.0, -2.0, -3.0], [0.0, 1.0, 1.5])
    assert not dissipation_check(diagnostics).passes


def test_convergence_check():
    # Given: identical snapshots and one shifted snapshot
    grid = make_grid(20.0, 0.1)
    u = gaussian_ic(grid, 1.0, 0.0, 2.0)
    assert convergence_check([u, u, u], 0.3) == 0.0
    assert convergence_check([u, u.with_values(u.values * 1.1)], 0.3) > 0.0
    assert convergence_check([], 0.3) == 0.0


def test_admissible_amplitude():
    # Given: KPP (no crossing) and bistable theta = 0.2 with lambda_c = 0.22
    assert admissible_amplitude(kpp_profile(), 0.5) == 1.0
    assert admissible_amplitude(bistable_profile(0.2), 0.22) == pytest.approx(0.1)
    assert admissible_amplitude(monostable_profile(), 0.32) == pytest.approx(0.2)


def test_envelope_of_zero_datum():
    # Given: the zero datum on a bistable patch, where 0 is linearly stable
    rf, grid = bistable_setup(width=10.0, L=40.0, h=0.1)
    report = linear_stability_envelope(zero_field(grid), rf, 0.2, SchemeConfig(dt=0.1, T=5.0))
    assert report.holds
    assert report.kappa == 0.0
    assert report.worst_ratio == 0.0
    assert report.lambda_c > 0


def test_envelope_kappa_bound():
    # Given: KPP, whose ratio bound holds for every amplitude, and bistable theta = 0.2
    assert envelope_kappa_bound(kpp_profile(), 0.5) == math.inf
    assert envelope_kappa_bound(bistable_profile(0.2), 0.22) == pytest.approx(0.1)
    assert envelope_kappa_bound(bistable_profile(0.2), 1.0) == math.inf


def test_envelope_is_checked_node_by_node():
    # Given: a narrow tiny bump on a bistable patch where 0 is stable
    rf, grid = bistable_setup(width=10.0, L=40.0, h=0.1)
    datum = gaussian_ic(grid, 1e-3, 0.0, 2.0)
    report = linear_stability_envelope(datum, rf, 0.2, SchemeConfig(dt=0.1, T=20.0, sample_every=1))
    assert report.holds
    assert 1e-3 <= report.kappa <= report.kappa_max
    assert report.worst_ratio == pytest.approx(1.0, abs=1e-6)
    assert report.l2_kappa > 0


def test_envelope_rejects_small_datum_with_heavy_tails():
    # Given: amplitude 1e-3 but width 30, so u0 <= kappa phi_c only for a huge kappa
    rf, grid = bistable_setup(width=10.0, L=40.0, h=0.1)
    datum = gaussian_ic(grid, 1e-3, 0.0, 30.0)
    assert datum.sup_norm < admissible_amplitude(rf.profile, 0.2)
    with pytest.raises(PreconditionUnverifiableError):
        linear_stability_envelope(datum, rf, 0.2, SchemeConfig(dt=0.1, T=5.0))


def test_envelope_rejects_large_datum():
    # Given: an amplitude far above the linear regime
    rf, grid = bistable_setup(width=10.0, L=40.0, h=0.1)
    with pytest.raises(PreconditionUnverifiableError):
        linear_stability_envelope(gaussian_ic(grid, 1.5, 0.0, 5.0), rf, 0.2, SchemeConfig(dt=0.1, T=5.0))


def test_envelope_rejects_unstable_zero():
    # Given: KPP at c = 0, where lambda_c < 0
    rf, grid = kpp_setup(width=10.0)
    with pytest.raises(PreconditionUnverifiableError):
        linear_stability_envelope(gaussian_ic(grid, 1e-3, 0.0, 5.0), rf, 0.0, SchemeConfig(dt=0.1, T=5.0))
