import argparse
import json
import time
from pathlib import Path
from typing import Callable, Optional

from aws_lambda_env_modeler import get_environment_variables
from pydantic import ValidationError

from wavelab.dal.config_file import config_hash, load_config
from wavelab.dal.csv_store import (
    write_bistability,
    write_branch,
    write_diagnostics,
    write_eigen,
    write_field,
    write_shapes,
    write_sweep,
    write_thresholds,
)
from wavelab.dal.manifest import write_manifest
from wavelab.handlers.models.env_vars import WavelabEnvVars
from wavelab.handlers.models.outcome import CommandOutcome
from wavelab.handlers.utils.observability import logger
from wavelab.logic.energy import classify, minimize, plateau_seed
from wavelab.logic.evolution import classify_longtime, convergence_check, dissipation_check, evolve
from wavelab.logic.lab.bistability import demo_problem, run_bistability_demo
from wavelab.logic.lab.experiment import build_problem, standard_datum
from wavelab.logic.lab.shapes import run_shape_study
from wavelab.logic.lab.sweep import run_sweep
from wavelab.logic.lab.thresholds import run_threshold_comparison
from wavelab.logic.spectral import c_lin, c_upper_kpp, ground_state, lambda_c, moving_frame_eigenfunction
from wavelab.logic.stationary import continue_in_c, newton_trace, verify_decay
from wavelab.models.config import ExperimentConfig
from wavelab.models.energy import Classification
from wavelab.models.evolution import Scheme
from wavelab.models.exceptions import ConfigError, DemoFailedError, NumericalError, WavelabError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_DEMO_FAILED = 4

OVERRIDE_FLAGS = ('profile', 'delta', 'c', 'dt', 'T', 'L', 'amplitude', 'scheme')


def simulate(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    rf, grid = build_problem(cfg)
    final, diagnostics = evolve(standard_datum(grid, cfg), cfg.c, rf, cfg.scheme_config())
    verdict = classify_longtime(diagnostics, cfg.thresholds())
    outputs = [write_field(out / 'final.csv', final), write_diagnostics(out / 'diagnostics.csv', diagnostics)]
    if cfg.write_profiles:
        outputs.extend(write_field(out / f'snapshot_t{t:g}.csv', snap) for t, snap in zip(diagnostics.snapshot_times, diagnostics.snapshots))
    dissipation = dissipation_check(diagnostics) if len(diagnostics.samples) >= 3 else None
    summary = {
        'verdict': verdict.kind.value,
        'P_final': verdict.final_P,
        'sup_final': verdict.final_sup,
        'energy_trend': verdict.energy_trend,
        'clamp_count': diagnostics.clamp_count,
        'late_h1c_spread': convergence_check(diagnostics.snapshots, cfg.c),
        'dissipation_ok': None if dissipation is None else dissipation.passes,
    }
    return CommandOutcome(summary=summary, outputs=outputs, grid=grid)


def minimize_command(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    rf, grid = build_problem(cfg)
    result = minimize(plateau_seed(grid, rf), cfg.c, rf, cfg.minimize_options(raise_on_cap=False))
    if not result.converged:
        logger.warning('descent hit the iteration cap, best iterate kept', extra={'c': cfg.c, 'iterations': result.iterations})
    summary = {
        'classification': result.classification.value,
        'energy': result.energy.value,
        'kinetic': result.energy.kinetic,
        'potential': result.energy.potential,
        'gradient_norm': result.energy.gradient_l2c_norm,
        'iterations': result.iterations,
        'converged': result.converged,
    }
    return CommandOutcome(summary=summary, outputs=[write_field(out / 'minimizer.csv', result.minimizer)], grid=grid)


def wave(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    """Minimiser at c, Newton polish, decay check, then continuation up to c_max."""
    rf, grid = build_problem(cfg)
    seed = minimize(plateau_seed(grid, rf), cfg.c, rf, cfg.minimize_options(raise_on_cap=False, record_history=False))
    if seed.classification != Classification.WAVE:
        logger.info('no wave at this speed, the minimiser is trivial', extra={'c': cfg.c})
        return CommandOutcome(summary={'wave': False, 'energy': seed.energy.value}, outputs=[write_field(out / 'wave.csv', seed.minimizer)], grid=grid)

    polished = newton_trace(seed.minimizer, cfg.c, rf)
    if classify(polished.profile) != Classification.WAVE:
        logger.warning('newton collapsed the minimiser onto the trivial state', extra={'c': cfg.c, 'sup_norm': polished.profile.sup_norm})
        return CommandOutcome(summary={'wave': False, 'energy': seed.energy.value}, outputs=[write_field(out / 'wave.csv', polished.profile)], grid=grid)
    decay = verify_decay(polished.profile, cfg.c, rf)
    branch = continue_in_c(polished.profile, cfg.c, cfg.c_step, cfg.c_max, rf)
    outputs = [write_field(out / 'wave.csv', polished.profile), write_branch(out / 'branch.csv', branch)]
    if cfg.write_profiles:
        outputs.extend(write_field(out / f'branch_c{entry.c:g}.csv', entry.profile) for entry in branch.entries)
    summary = {
        'wave': True,
        'energy': seed.energy.value,
        'residual': polished.residual,
        'sup_norm': polished.profile.sup_norm,
        'decay_ok': decay.ok,
        'branch_points': len(branch.entries),
        'fold_estimate': branch.fold_estimate,
    }
    return CommandOutcome(summary=summary, outputs=outputs, grid=grid)


def eigen(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    rf, grid = build_problem(cfg)
    eig = ground_state(rf, grid)
    speeds = sorted({cfg.c, *cfg.c_list})
    linear = c_lin(eig.lambda0)
    upper = c_upper_kpp(rf, grid)
    outputs = [write_eigen(out / 'eigen.csv', eig, {c: lambda_c(eig.lambda0, c) for c in speeds}, linear, upper)]
    if cfg.write_profiles:
        outputs.append(write_field(out / 'eigenfunction.csv', moving_frame_eigenfunction(eig, cfg.c)))
    summary = {'lambda0': eig.lambda0, 'lambda_c': lambda_c(eig.lambda0, cfg.c), 'c_lin': linear, 'c_upper_kpp': upper, 'residual': eig.residual}
    return CommandOutcome(summary=summary, outputs=outputs, grid=grid)


def sweep(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    result = run_sweep(cfg)
    outputs = [write_sweep(out / 'sweep.csv', result, cfg.thresholds(), config_hash(cfg))]
    summary = {
        'estimated_critical_speed': result.estimated_critical_speed,
        'bracket': result.bracket,
        'monotone': result.monotone,
        'runs': len(result.rows),
        'failed_runs': sum(row.error is not None for row in result.rows),
    }
    runtimes = {f'runtime_c{row.c:g}': f'{row.runtime:.3f}' for row in result.rows}
    return CommandOutcome(summary=summary, outputs=outputs, grid=build_problem(cfg)[1], manifest_extra=runtimes)


def shapes(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    study = run_shape_study(cfg)
    written = write_shapes(out, study, cfg.thresholds(), config_hash(cfg), with_profiles=cfg.write_profiles)
    rows = [{'delta': row.delta, 'c': row.c, 'verdict': row.verdict.value, 'back_tail_mass': row.back_tail_mass} for row in study.rows]
    return CommandOutcome(summary={'rows': rows}, outputs=written, grid=build_problem(cfg)[1])


def bistability(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    report = run_bistability_demo(cfg, strict=False)
    written = write_bistability(out, report, cfg.thresholds(), config_hash(cfg))
    deferred: Optional[WavelabError] = None
    try:
        report.raise_for_failure()
    except DemoFailedError as exc:
        deferred = exc
    summary = {'passed': report.passed, 'cases': [{'c': case.c, 'staircase': case.staircase, **case.clauses} for case in report.cases]}
    return CommandOutcome(summary=summary, outputs=written, grid=demo_problem(cfg)[1], deferred_error=deferred)


def thresholds(cfg: ExperimentConfig, out: Path) -> CommandOutcome:
    report = run_threshold_comparison(cfg)
    table = write_thresholds(out / 'thresholds.csv', report, config_hash(cfg))
    summary = {'profile': report.profile, 'rows': [{**row.model_dump(), 'gaps': row.gaps()} for row in report.rows]}
    return CommandOutcome(summary=summary, outputs=[table], grid=build_problem(cfg)[1])


COMMANDS: dict[str, Callable[[ExperimentConfig, Path], CommandOutcome]] = {
    'simulate': simulate,
    'minimize': minimize_command,
    'wave': wave,
    'eigen': eigen,
    'sweep': sweep,
    'shapes': shapes,
    'bistability': bistability,
    'thresholds': thresholds,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='wavelab', description='Forced-speed reaction-diffusion travelling-wave lab.')
    parser.add_argument('command', choices=list(COMMANDS))
    parser.add_argument('--config', type=Path, default=None, help='flat "key = value" experiment file')
    parser.add_argument('--out', type=Path, default=None, help='output directory (overrides output_dir)')
    parser.add_argument('--profile', default=None, help='kpp, monostable, bistable[:theta], multistable5 or poly:[c0,...]')
    parser.add_argument('--delta', type=float, default=None)
    parser.add_argument('--c', type=float, default=None, help='frame speed')
    parser.add_argument('--dt', type=float, default=None)
    parser.add_argument('--T', type=float, default=None)
    parser.add_argument('--L', type=float, default=None)
    parser.add_argument('--amplitude', type=float, default=None)
    parser.add_argument('--scheme', choices=[scheme.value for scheme in Scheme], default=None)
    return parser


def _configure_logging() -> None:
    env = get_environment_variables(model=WavelabEnvVars)
    logger.setLevel('ERROR' if env.LOG_LEVEL == 'EXCEPTION' else env.LOG_LEVEL)


def main(argv: Optional[list[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config, {flag: getattr(args, flag) for flag in OVERRIDE_FLAGS})
        out = args.out if args.out is not None else Path(cfg.output_dir)
        logger.info('run started', extra={'command': args.command, 'profile': cfg.profile, 'out': str(out)})
        outcome = COMMANDS[args.command](cfg, out)
        wall_time = time.perf_counter() - start
        write_manifest(out, args.command, cfg, config_hash(cfg), wall_time, outcome.grid, tuple(outcome.outputs), outcome.manifest_extra)
        logger.info('run finished', extra={'command': args.command, 'wall_time': wall_time})
        print(json.dumps({'command': args.command, **outcome.summary}))
        if outcome.deferred_error is not None:
            raise outcome.deferred_error
    except (ConfigError, ValidationError) as exc:
        logger.error('configuration rejected', extra={'error': str(exc)})
        return EXIT_CONFIG
    except DemoFailedError as exc:
        logger.error('demonstration failed', extra={'clause': exc.clause})
        return EXIT_DEMO_FAILED
    except NumericalError as exc:
        logger.exception('numerical failure', extra={'error_type': type(exc).__name__})
        return EXIT_NUMERICAL
    return EXIT_OK
