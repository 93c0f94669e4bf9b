import csv
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from wavelab.models.evolution import EXTINCT_RULE, PERSIST_RULE, TrajectoryDiagnostics, VerdictThresholds
from wavelab.models.grid import NodalField
from wavelab.models.lab import BistabilityReport, ShapeStudy, SweepResult, ThresholdReport
from wavelab.models.spectral import EigenResult
from wavelab.models.stationary import WaveBranch

FLOAT_FORMAT = '%.17g'

FIELD_HEADER = ('z', 'u')
DIAGNOSTICS_HEADER = ('t', 'P', 'E', 'dissipation', 'sup_norm')
BRANCH_HEADER = ('c', 'energy', 'residual', 'sup_norm', 'decay_ok')
SWEEP_HEADER = ('c', 'verdict', 'P_final', 'E_final', 'error')
SHAPES_HEADER = ('delta', 'c', 'verdict', 'back_tail_mass', 'outside_fraction', 'edge_steepness')
BISTABILITY_HEADER = (
    'c',
    'verdict_low',
    'verdict_high',
    'verdict_tiny',
    'sup_low',
    'sup_high',
    'energy_low',
    'energy_high',
    'variational_lower',
    'variational_upper',
    'staircase',
)
EIGEN_HEADER = ('c', 'lambda0', 'lambda_c', 'c_lin', 'c_upper_kpp')
THRESHOLD_HEADER = ('delta', 'energy_lower', 'branch_fold', 'dynamic', 'majorant_upper', 'lambda0', 'c_lin')


def _cell(value: object) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float | np.floating):
        return FLOAT_FORMAT % value
    if hasattr(value, 'value'):
        return str(value.value)
    return str(value)


def comment_lines(thresholds: Optional[VerdictThresholds] = None, config_hash: Optional[str] = None) -> list[str]:
    lines = []
    if config_hash is not None:
        lines.append(f'config_sha256={config_hash}')
    if thresholds is not None:
        lines.extend(f'{name}={FLOAT_FORMAT % value}' for name, value in thresholds.model_dump().items())
        lines.append(f'extinct_rule={EXTINCT_RULE}')
        lines.append(f'persist_rule={PERSIST_RULE}')
    return lines


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[object]], comments: Sequence[str] = ()) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', encoding='utf-8', newline='') as handle:
        for comment in comments:
            handle.write(f'# {comment}\n')
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        writer.writerows([_cell(value) for value in row] for row in rows)
    return path


def write_field(path: Path, u: NodalField) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([u.grid.nodes, u.values])
    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=',', header=','.join(FIELD_HEADER), comments='')
    return path


def read_field(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=',', skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def write_diagnostics(path: Path, diagnostics: TrajectoryDiagnostics) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([diagnostics.column(name) for name in DIAGNOSTICS_HEADER])
    np.savetxt(path, data, fmt=FLOAT_FORMAT, delimiter=',', header=','.join(DIAGNOSTICS_HEADER), comments='')
    return path


def write_branch(path: Path, branch: WaveBranch) -> Path:
    rows = ((entry.c, entry.energy, entry.residual, entry.sup_norm, entry.decay_ok) for entry in branch.entries)
    comments = [f'fold_estimate={_cell(branch.fold_estimate)}']
    return write_rows(path, BRANCH_HEADER, rows, comments)


def write_sweep(path: Path, result: SweepResult, thresholds: VerdictThresholds, config_hash: Optional[str] = None) -> Path:
    """Sweep table without runtimes, so equal configurations give identical files."""
    comments = comment_lines(thresholds, config_hash)
    comments.append(f'estimated_critical_speed={_cell(result.estimated_critical_speed)}')
    comments.append(f'monotone={_cell(result.monotone)}')
    rows = ((row.c, row.verdict, row.P_final, row.E_final, row.error) for row in result.rows)
    return write_rows(path, SWEEP_HEADER, rows, comments)


def write_shapes(
    directory: Path, study: ShapeStudy, thresholds: VerdictThresholds, config_hash: Optional[str] = None, with_profiles: bool = True
) -> list[Path]:
    """shapes.csv first, then one profile per row when ``with_profiles`` is set."""
    rows = ((row.delta, row.c, row.verdict, row.back_tail_mass, row.outside_fraction, row.edge_steepness) for row in study.rows)
    written = [write_rows(directory / 'shapes.csv', SHAPES_HEADER, rows, comment_lines(thresholds, config_hash))]
    if with_profiles:
        written.extend(write_field(directory / f'shape_delta{row.delta:g}_c{row.c:g}.csv', row.profile) for row in study.rows)
    return written


def write_bistability(directory: Path, report: BistabilityReport, thresholds: VerdictThresholds, config_hash: Optional[str] = None) -> list[Path]:
    """bistability.csv first, then the low and high limit profiles of every case."""
    rows = []
    profiles = []
    for case in report.cases:
        rows.append(
            (
                case.c,
                case.verdict_low,
                case.verdict_high,
                case.verdict_tiny,
                case.sup_low,
                case.sup_high,
                case.energy_low,
                case.energy_high,
                case.variational_lower,
                case.variational_upper,
                case.staircase,
            )
        )
        profiles.append(write_field(directory / f'bistability_low_c{case.c:g}.csv', case.profile_low))
        profiles.append(write_field(directory / f'bistability_high_c{case.c:g}.csv', case.profile_high))
    comments = comment_lines(thresholds, config_hash)
    comments.append(f'passed={_cell(report.passed)}')
    return [write_rows(directory / 'bistability.csv', BISTABILITY_HEADER, rows, comments), *profiles]


def write_eigen(path: Path, eig: EigenResult, lambda_by_speed: dict[float, float], c_lin: Optional[float], c_upper: float) -> Path:
    rows = ((c, eig.lambda0, lam, c_lin, c_upper) for c, lam in lambda_by_speed.items())
    return write_rows(path, EIGEN_HEADER, rows, [f'residual={FLOAT_FORMAT % eig.residual}'])


def write_thresholds(path: Path, report: ThresholdReport, config_hash: Optional[str] = None) -> Path:
    rows = ((r.delta, r.energy_lower, r.branch_fold, r.dynamic, r.majorant_upper, r.lambda0, r.c_lin) for r in report.rows)
    comments = comment_lines(config_hash=config_hash)
    comments.append(f'profile={report.profile}')
    return write_rows(path, THRESHOLD_HEADER, rows, comments)
