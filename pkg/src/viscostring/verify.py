"""Numerical verification of the asymptotic estimates and identities.

The estimates all have the shape "deviation of mode n is at most M/n for
some constant M".  The constant is never quantified, so the checkable
content is the growth rate: the scaled deviations n * e_n must not grow
along the mode range.  Operationally a report's verdict is BOUNDED when
the maximum of the scaled sequence over the upper half of the index range
is at most twice the maximum over the lower half, and GROWING otherwise.
The rule is scale invariant, so rescaling kernels, controls or targets
cannot flip a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .kernels import DerivedKernelSet, MemoryKernel
from .moments import MomentTarget, SynthesisReport, build_family, gram, synthesize_control
from .spectral import SpectralState, mode_params, simulate_coefficients
from .volterra import (
    TimeGrid,
    convolve,
    mode_derivative,
    parallel_map,
    solve_mode,
)

__all__ = [
    "TrendVerdict",
    "AsymptoticReport",
    "check_mode_asymptotics",
    "check_mode_derivative_asymptotics",
    "check_convolution_asymptotics",
    "check_resolvent_identity",
    "check_stress_deformation_gap",
    "closed_loop_roundtrip",
    "RoundtripReport",
]


class TrendVerdict(Enum):
    BOUNDED = "bounded"
    GROWING = "growing"


@dataclass(frozen=True, eq=False)
class AsymptoticReport:
    """Per-mode deviations with a growth-trend verdict."""

    label: str
    ns: np.ndarray
    deviations: np.ndarray
    scaled: np.ndarray           # |n| * deviation
    verdict: TrendVerdict
    lower_max: float
    upper_max: float
    step: float
    horizon: float

    def __post_init__(self):
        for arr in (self.ns, self.deviations, self.scaled):
            arr.setflags(write=False)


def _trend_report(label: str, ns: Sequence[int], deviations: Sequence[float],
                  step: float, horizon: float) -> AsymptoticReport:
    ns_arr = np.asarray(list(ns))
    dev_arr = np.asarray(list(deviations), dtype=float)
    if len(ns_arr) < 2:
        raise ValueError("trend verdict needs at least two modes")
    scaled = np.abs(ns_arr) * dev_arr
    half = len(ns_arr) // 2
    lower = float(np.max(scaled[:half]))
    upper = float(np.max(scaled[half:]))
    verdict = TrendVerdict.BOUNDED if upper <= 2.0 * lower else TrendVerdict.GROWING
    return AsymptoticReport(label=label, ns=ns_arr, deviations=dev_arr,
                            scaled=scaled, verdict=verdict,
                            lower_max=lower, upper_max=upper,
                            step=step, horizon=horizon)


def _params_for(kernels: DerivedKernelSet, n: int):
    par = mode_params(n, kernels.alpha)
    if not par.beta_is_real:
        raise ValueError(
            f"mode n={n}: asymptotic checks need a real oscillation frequency "
            f"(alpha={kernels.alpha!r})"
        )
    return par


def check_mode_asymptotics(kernels: DerivedKernelSet, grid: TimeGrid,
                           n_range: Iterable[int],
                           threads: int = 1) -> AsymptoticReport:
    """Deviation of each mode response from its damped cosine."""
    times = grid.times()

    def deviation(n: int) -> float:
        par = _params_for(kernels, n)
        y = solve_mode(n, kernels, grid)
        return float(np.max(np.abs(y.samples - par.damped_cos(times))))

    ns = list(n_range)
    devs = parallel_map(deviation, ns, threads=threads)
    return _trend_report("mode vs damped cosine", ns, devs, grid.step, grid.horizon)


def check_mode_derivative_asymptotics(kernels: DerivedKernelSet, grid: TimeGrid,
                                      n_range: Iterable[int],
                                      threads: int = 1) -> AsymptoticReport:
    """Deviation of each scaled mode derivative from its damped sine."""
    times = grid.times()

    def deviation(n: int) -> float:
        par = _params_for(kernels, n)
        y = solve_mode(n, kernels, grid)
        dy = mode_derivative(y, kernels)
        beta = par.beta.real if isinstance(par.beta, complex) else par.beta
        return float(np.max(np.abs(dy.samples / beta + par.damped_sin(times))))

    ns = list(n_range)
    devs = parallel_map(deviation, ns, threads=threads)
    return _trend_report("mode derivative vs damped sine", ns, devs,
                         grid.step, grid.horizon)


def check_convolution_asymptotics(kernels: DerivedKernelSet, grid: TimeGrid,
                                  smooth_factor, n_range: Iterable[int],
                                  threads: int = 1) -> AsymptoticReport:
    """Deviation of n * (F ⋆ y_n) from F(0) times the damped sine.

    `smooth_factor` is either a MemoryKernel (evaluated in closed form on
    the grid, value at zero exact) or a pair (samples, value_at_zero) for
    derived kernels such as the stress series kernel.
    """
    times = grid.times()
    if isinstance(smooth_factor, MemoryKernel):
        samples = smooth_factor.memory(times)
        at_zero = float(smooth_factor.memory(0.0))
    else:
        samples, at_zero = smooth_factor
        samples = np.asarray(samples, dtype=float)
    if len(samples) != grid.steps + 1:
        raise ValueError("factor sample length does not match the grid")

    def deviation(n: int) -> float:
        par = _params_for(kernels, n)
        y = solve_mode(n, kernels, grid)
        probe = float(n) * convolve(samples, y.samples, grid)
        return float(np.max(np.abs(probe - at_zero * par.damped_sin(times))))

    ns = list(n_range)
    devs = parallel_map(deviation, ns, threads=threads)
    return _trend_report("smooth convolution vs damped sine", ns, devs,
                         grid.step, grid.horizon)


def check_resolvent_identity(kernels: DerivedKernelSet, grid: TimeGrid,
                             n: int) -> float:
    """Residual of the oscillator representation of one mode response.

    The mode response y_n should equal G_n + R ⋆ G_n where R is the
    resolvent kernel and G_n collects the damped oscillator profile plus
    three correction convolutions built from y_n itself.  Returns the
    maximum absolute residual over the grid; O(step^2) for smooth kernels.
    """
    par = _params_for(kernels, n)
    times = grid.times()
    y = solve_mode(n, kernels, grid).samples
    beta = par.beta.real if isinstance(par.beta, complex) else par.beta
    mu = par.mu.real if isinstance(par.mu, complex) else par.mu
    damped_sin = par.damped_sin(times)

    base = par.profile(times)
    correction = (1.0 - mu) * convolve(kernels.relaxation_scaled_d1, y, grid)
    ring = float(kernels.remainder0[0]) * (mu / beta) * convolve(damped_sin, y, grid)
    inner = convolve(kernels.remainder1, damped_sin, grid)
    double = (mu / beta) * convolve(inner, y, grid)
    assembled = base + correction + ring - double

    reconstructed = assembled + convolve(kernels.resolvent, assembled, grid)
    return float(np.max(np.abs(y - reconstructed)))


def check_stress_deformation_gap(state: SpectralState) -> AsymptoticReport:
    """Trend of the gap between raw stress and deformation coefficients."""
    ns = np.arange(1, state.n_max + 1)
    devs = np.abs(state.stress - state.deformation)
    return _trend_report("stress vs deformation coefficients", ns, devs,
                         float("nan"), state.horizon)


@dataclass(frozen=True, eq=False)
class RoundtripReport:
    """Synthesis followed by re-simulation, compared in coefficient space."""

    target: MomentTarget
    achieved: np.ndarray          # v_n + i * sigma_n from the re-simulation
    relative_error: float
    synthesis: SynthesisReport

    def __post_init__(self):
        self.achieved.setflags(write=False)


def closed_loop_roundtrip(kernels: DerivedKernelSet, grid: TimeGrid,
                          target: MomentTarget,
                          threads: int = 1) -> RoundtripReport:
    """Synthesise a steering control, re-simulate it, compare coefficients.

    The comparison norm is the coefficient-space distance between the
    achieved velocity/stress pairs and the requested ones, relative to the
    target norm (zero targets compare absolutely).
    """
    n_max = target.n_max
    modes = parallel_map(lambda n: solve_mode(n, kernels, grid),
                         range(1, n_max + 1), threads=threads)
    family = build_family(kernels, grid, n_max, threads=threads, mode_family=modes)
    system = gram(family, grid)
    synthesis = synthesize_control(system, target, alpha=kernels.alpha)
    state = simulate_coefficients(synthesis.control, modes, kernels)
    achieved = state.velocity + 1j * state.stress
    gap = achieved - target.gamma
    target_norm = float(np.sqrt(np.sum(np.abs(target.gamma) ** 2)))
    err = float(np.sqrt(np.sum(np.abs(gap) ** 2)))
    relative = err / target_norm if target_norm > 0.0 else err
    return RoundtripReport(target=target, achieved=achieved,
                           relative_error=relative, synthesis=synthesis)
