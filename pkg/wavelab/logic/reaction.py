import json
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike

from wavelab.handlers.utils.observability import logger
from wavelab.models.exceptions import ConfigError, MaximizationFailure
from wavelab.models.grid import Grid
from wavelab.models.reaction import ProfileKind, ReactionField, ReactionProfile

ZFunction = Callable[[ArrayLike], np.ndarray]

DEFAULT_THETA = 0.2
MULTISTABLE_ROOTS = (0.0, 0.2, 1.0, 1.1, 1.5)
_BRACKET_SAMPLES = 1000


def kpp_profile() -> ReactionProfile:
    """f_0(u) = u(1-u)."""
    return ReactionProfile(kind=ProfileKind.KPP, coefficients=(0.0, 1.0, -1.0), upper_cap=1.0)


def monostable_profile() -> ReactionProfile:
    """f_0(u) = u²(1-u)."""
    return ReactionProfile(kind=ProfileKind.MONOSTABLE, coefficients=(0.0, 0.0, 1.0, -1.0), upper_cap=1.0)


def bistable_profile(theta: float = DEFAULT_THETA) -> ReactionProfile:
    """f_0(u) = u(1-u)(u-theta)."""
    return ReactionProfile(kind=ProfileKind.BISTABLE, coefficients=(0.0, -theta, 1.0 + theta, -1.0), theta=theta, upper_cap=1.0)


def multistable_profile() -> ReactionProfile:
    """f_0(u) = u(1-u)(u-0.2)(1.1-u)(1.5-u), two stable levels 1 and 1.5."""
    coefficients = -P.polyfromroots(MULTISTABLE_ROOTS)
    return ReactionProfile(kind=ProfileKind.MULTISTABLE, coefficients=tuple(float(x) for x in coefficients), upper_cap=max(MULTISTABLE_ROOTS))


def custom_profile(coefficients: list[float]) -> ReactionProfile:
    """Arbitrary polynomial; the cap is its largest positive real root (1 when there is none)."""
    trimmed = np.trim_zeros(np.asarray(coefficients, dtype=float), trim='b')
    upper_cap = 1.0
    if trimmed.size > 1:
        roots = P.polyroots(trimmed)
        real = roots[np.abs(roots.imag) <= 1e-10].real
        positive = real[real > 1e-12]
        if positive.size:
            upper_cap = float(np.max(positive))
    return ReactionProfile(kind=ProfileKind.CUSTOM, coefficients=tuple(float(x) for x in coefficients), upper_cap=upper_cap)


def parse_profile(name: str) -> ReactionProfile:
    """Resolve a catalog name: kpp, monostable, bistable[:theta], multistable5, poly:[c0,...,cn]."""
    key, _, argument = name.strip().partition(':')
    key = key.strip().lower()
    try:
        if key == ProfileKind.KPP.value:
            return kpp_profile()
        if key == ProfileKind.MONOSTABLE.value:
            return monostable_profile()
        if key == ProfileKind.BISTABLE.value:
            return bistable_profile(float(argument) if argument else DEFAULT_THETA)
        if key == ProfileKind.MULTISTABLE.value:
            return multistable_profile()
        if key == ProfileKind.CUSTOM.value:
            coefficients = json.loads(argument)
            if not isinstance(coefficients, list) or not coefficients:
                raise ValueError('poly profile needs a non-empty coefficient list')
            return custom_profile([float(x) for x in coefficients])
    except ValueError as exc:  # pydantic.ValidationError and json errors are ValueErrors
        raise ConfigError(f'invalid profile {name!r}: {exc}') from exc
    raise ConfigError(f'unknown profile {name!r}')


def make_field(profile: ReactionProfile, width: float, delta: float, center: float = 0.0) -> ReactionField:
    return ReactionField(profile=profile, patch=(center - 0.5 * width, center + 0.5 * width), delta=delta)


def in_patch(rf: ReactionField, z: ArrayLike) -> np.ndarray:
    z_arr = np.asarray(z, dtype=float)
    if not rf.has_patch:
        return np.zeros(z_arr.shape, dtype=bool)
    return (z_arr >= rf.patch[0]) & (z_arr <= rf.patch[1])


def _scalar_or_array(value: np.ndarray) -> np.ndarray | float:
    return float(value) if value.ndim == 0 else value


def profile_values(profile: ReactionProfile, u: ArrayLike) -> np.ndarray:
    """f_0 extended by f_0(0) = 0 for negative densities."""
    u_arr = np.asarray(u, dtype=float)
    return P.polyval(np.maximum(u_arr, 0.0), profile.coefficients)


def profile_antiderivative(profile: ReactionProfile, u: ArrayLike) -> np.ndarray:
    u_arr = np.asarray(u, dtype=float)
    return P.polyval(np.maximum(u_arr, 0.0), P.polyint(profile.coefficients))


def profile_derivative(profile: ReactionProfile, u: ArrayLike) -> np.ndarray:
    u_arr = np.asarray(u, dtype=float)
    return np.where(u_arr >= 0.0, P.polyval(u_arr, P.polyder(profile.coefficients)), 0.0)


def eval_f(rf: ReactionField, z: ArrayLike, u: ArrayLike) -> np.ndarray | float:
    """f(z, u). For u < 0 the patch gives f_0(0) = 0 while outside it the decay -delta*u stays linear and turns positive."""
    z_arr, u_arr = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(u, dtype=float))
    value = np.where(in_patch(rf, z_arr), profile_values(rf.profile, u_arr), -rf.delta * u_arr)
    return _scalar_or_array(value)


def eval_F(rf: ReactionField, z: ArrayLike, u: ArrayLike) -> np.ndarray | float:
    z_arr, u_arr = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(u, dtype=float))
    value = np.where(in_patch(rf, z_arr), profile_antiderivative(rf.profile, u_arr), -0.5 * rf.delta * u_arr * u_arr)
    return _scalar_or_array(value)


def eval_df_du(rf: ReactionField, z: ArrayLike, u: ArrayLike) -> np.ndarray | float:
    z_arr, u_arr = np.broadcast_arrays(np.asarray(z, dtype=float), np.asarray(u, dtype=float))
    value = np.where(in_patch(rf, z_arr), profile_derivative(rf.profile, u_arr), -rf.delta)
    return _scalar_or_array(value)


def linearization_at_zero(rf: ReactionField) -> ZFunction:
    """z -> f_u(z, 0)."""
    slope = rf.profile.coefficients[1] if len(rf.profile.coefficients) > 1 else 0.0

    def potential(z: ArrayLike) -> np.ndarray:
        return np.where(in_patch(rf, z), slope, -rf.delta)

    return potential


def majorant_slope_value(profile: ReactionProfile) -> float:
    """max over (0, M] of f_0(s)/s; the value at s -> 0 counts as f_0'(0).

    The best of the endpoints and the real stationary points must beat its neighbours M/1000 away on either
    side; when it does not, the stationary points missed the maximum and MaximizationFailure is raised.
    """
    ratio = np.asarray(profile.coefficients[1:] or (0.0,), dtype=float)
    upper = profile.upper_cap
    candidates = [0.0, upper]
    derivative = P.polyder(ratio)
    if np.any(derivative != 0.0):
        roots = P.polyroots(derivative) if derivative.size > 1 else np.array([])
        real = roots[np.abs(roots.imag) <= 1e-10].real
        candidates.extend(float(r) for r in real if 0.0 < r < upper)
    values = P.polyval(np.asarray(candidates), ratio)
    if not np.all(np.isfinite(values)):
        raise MaximizationFailure(f'ratio f_0(s)/s could not be maximised on (0, {upper}]')
    best_at = candidates[int(np.argmax(values))]
    best = float(np.max(values))
    neighbours = np.clip([best_at - upper / _BRACKET_SAMPLES, best_at + upper / _BRACKET_SAMPLES], 0.0, upper)
    if np.any(P.polyval(neighbours, ratio) > best + 1e-12 * max(1.0, abs(best))):
        raise MaximizationFailure(f'stationary points of f_0(s)/s do not bracket its maximum on (0, {upper}]')
    logger.debug('majorant slope', extra={'kind': profile.kind.value, 'slope': best})
    return best


def kpp_majorant_slope(rf: ReactionField) -> ZFunction:
    """z -> sup_{s>0} f(z,s)/s, the slope at 0 of the smallest KPP majorant."""
    slope = majorant_slope_value(rf.profile)

    def majorant(z: ArrayLike) -> np.ndarray:
        return np.where(in_patch(rf, z), slope, -rf.delta)

    return majorant


def positive_mass(profile: ReactionProfile) -> float:
    """Exact integral of f_0 over [0, 1]."""
    return float(P.polyval(1.0, P.polyint(profile.coefficients)))


def max_antiderivative(profile: ReactionProfile, upper: float | None = None) -> float:
    """max of F_0 on [0, upper] (upper defaults to the cap M), never below zero."""
    upper = profile.upper_cap if upper is None else upper
    candidates = [0.0, upper]
    trimmed = np.trim_zeros(np.asarray(profile.coefficients), trim='b')
    if trimmed.size > 1:
        roots = P.polyroots(trimmed)
        candidates.extend(float(r.real) for r in roots if abs(r.imag) <= 1e-10 and 0.0 < r.real < upper)
    return max(0.0, float(np.max(P.polyval(np.asarray(candidates), P.polyint(profile.coefficients)))))


def lipschitz_estimate(rf: ReactionField, samples: int = 4001) -> float:
    """Sampled sup of |f_u(z, s)| over s in [0, M] and both regions."""
    s = np.linspace(0.0, rf.profile.upper_cap, samples)
    inside = float(np.max(np.abs(profile_derivative(rf.profile, s)))) if rf.has_patch else 0.0
    return max(inside, rf.delta)


def patch_fraction(rf: ReactionField, grid: Grid) -> np.ndarray:
    """Share of each node's control cell [z - h/2, z + h/2] lying inside the patch (1/2 on an edge node)."""
    if not rf.has_patch:
        return np.zeros(grid.n)
    z = grid.nodes
    half = 0.5 * grid.h
    overlap = np.minimum(z + half, rf.patch[1]) - np.maximum(z - half, rf.patch[0])
    return np.clip(overlap / grid.h, 0.0, 1.0)


class NodalReaction:
    """The reaction term as every discrete operator sees it: f_0 and -delta*u blended by cell fraction.

    Negative densities follow eval_f: the f_0 share is zero and the -delta*u share keeps its sign change.
    """

    def __init__(self, rf: ReactionField, grid: Grid) -> None:
        self.rf = rf
        self.grid = grid
        self.fraction = patch_fraction(rf, grid)
        self.mixed = self.fraction > 0.0
        self._outside = 1.0 - self.fraction

    def f(self, u: np.ndarray) -> np.ndarray:
        return self.fraction * profile_values(self.rf.profile, u) - self._outside * self.rf.delta * u

    def df_du(self, u: np.ndarray) -> np.ndarray:
        return self.fraction * profile_derivative(self.rf.profile, u) - self._outside * self.rf.delta

    def linear_potential(self) -> np.ndarray:
        """f_u(z_i, 0) averaged over each cell."""
        slope = self.rf.profile.coefficients[1] if len(self.rf.profile.coefficients) > 1 else 0.0
        return self.fraction * slope - self._outside * self.rf.delta

    def majorant_potential(self) -> np.ndarray:
        return self.fraction * majorant_slope_value(self.rf.profile) - self._outside * self.rf.delta
