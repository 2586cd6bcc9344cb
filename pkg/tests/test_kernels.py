import math

import numpy as np
import pytest

from viscostring import (
    KernelFamily,
    MemoryKernel,
    TimeGrid,
    convolve,
    derive_kernels,
    exceptional_index_check,
)
from viscostring.errors import ExceptionalIndexError

from conftest import DESK_KERNEL, ELASTIC_KERNEL, TWO_PI

POLY_KERNEL = MemoryKernel.polynomial([0.3, -0.1, 0.02, 0.0, 0.001])

# midpoint Riemann refinement of (Na * Ma)(2*pi) at step h/64, h = 2*pi/8192
GAP_AT_TWO_PI_ORACLE = 0.0451246708146714


def test_zero_kernel_collapses_every_derived_kernel():
    grid = TimeGrid(TWO_PI, 512)
    dk = derive_kernels(ELASTIC_KERNEL, grid)
    assert dk.alpha == 0.0
    assert np.all(dk.relaxation == 1.0)
    assert np.all(dk.relaxation_scaled == 1.0)
    assert np.all(dk.velocity_kernel == 0.0)
    assert np.all(dk.stress_kernel == 1.0)
    assert np.all(dk.stress_gap == 0.0)
    assert np.all(dk.resolvent == 0.0)
    assert dk.is_elastic


def test_desk_kernel_scaled_relaxation_closed_form(desk_grid, desk_kernels):
    t = desk_grid.times()
    expected = 1.4 * np.exp(-0.4 * t) - 0.4 * np.exp(-1.4 * t)
    assert desk_kernels.alpha == -0.2
    assert np.max(np.abs(desk_kernels.relaxation_scaled - expected)) < 1e-14


def test_gap_kernel_matches_refined_riemann_oracle():
    grid = TimeGrid(TWO_PI, 8192)
    dk = derive_kernels(DESK_KERNEL, grid)
    assert abs(dk.stress_gap[-1] - GAP_AT_TWO_PI_ORACLE) < 1e-6


@pytest.mark.parametrize("kernel", [ELASTIC_KERNEL, DESK_KERNEL, POLY_KERNEL],
                         ids=["zero", "exponential", "polynomial"])
def test_derived_kernel_invariants(kernel):
    grid = TimeGrid(TWO_PI, 1024)
    dk = derive_kernels(kernel, grid)
    assert dk.relaxation[0] == 1.0
    assert dk.relaxation_scaled[0] == 1.0
    assert abs(dk.relaxation_scaled_d1[0]) <= 1e-12
    assert dk.stress_kernel[0] == 1.0
    assert dk.stress_gap[0] == 0.0
    assert dk.velocity_kernel[0] == pytest.approx(float(kernel.memory(0.0)), abs=1e-14)
    assert dk.resolvent[0] == 0.0
    # the velocity kernel equals the scaled memory kernel identically
    assert np.max(np.abs(dk.velocity_kernel - dk.memory_scaled)) < 1e-13


def test_gap_kernel_quadrature_is_second_order():
    errs = []
    for steps in (1024, 2048):
        grid = TimeGrid(TWO_PI, steps)
        dk = derive_kernels(DESK_KERNEL, grid)
        t = grid.times()
        exact = 0.56 * np.exp(-0.4 * t) * (1 - np.exp(-t)) \
            - 0.16 * t * np.exp(-1.4 * t)
        errs.append(np.max(np.abs(dk.stress_gap - exact)))
    order = math.log2(errs[0] / errs[1])
    assert order >= 1.9


@pytest.mark.parametrize("kernel", [DESK_KERNEL, POLY_KERNEL],
                         ids=["exponential", "polynomial"])
def test_resolvent_solves_its_equation_on_the_grid(kernel):
    grid = TimeGrid(TWO_PI, 2048)
    dk = derive_kernels(kernel, grid)
    residual = dk.resolvent \
        + convolve(dk.relaxation_scaled_d1, dk.resolvent, grid) \
        + dk.relaxation_scaled_d1
    assert np.max(np.abs(residual)) < 1e-12


def test_polynomial_derivatives_match_finite_differences():
    t = np.linspace(0.0, 3.0, 7)
    eps = 1e-5
    d1 = (POLY_KERNEL.memory(t + eps) - POLY_KERNEL.memory(t - eps)) / (2 * eps)
    d2 = (POLY_KERNEL.memory(t + eps) - 2 * POLY_KERNEL.memory(t)
          + POLY_KERNEL.memory(t - eps)) / eps ** 2
    assert np.max(np.abs(POLY_KERNEL.memory_d1(t) - d1)) < 1e-8
    assert np.max(np.abs(POLY_KERNEL.memory_d2(t) - d2)) < 1e-4
    # relaxation is the exact antiderivative of the memory kernel
    grid = TimeGrid(3.0, 3000)
    tt = grid.times()
    numeric = 1.0 + np.concatenate(
        [[0.0], np.cumsum((POLY_KERNEL.memory(tt)[1:] + POLY_KERNEL.memory(tt)[:-1])
                          * 0.5 * grid.step)])
    assert np.max(np.abs(POLY_KERNEL.relaxation(tt) - numeric)) < 1e-6


def test_kernel_validation():
    with pytest.raises(ValueError):
        MemoryKernel.exponential_sum([(0.4, 0.0)])
    with pytest.raises(ValueError):
        MemoryKernel.exponential_sum([(0.4, -1.0)])
    with pytest.raises(ValueError):
        MemoryKernel.exponential_sum([])
    with pytest.raises(ValueError):
        MemoryKernel.polynomial([1.0] * 6)
    with pytest.raises(ValueError):
        MemoryKernel(KernelFamily.ZERO, (1.0,))


def test_exceptional_index_scan():
    assert exceptional_index_check(ELASTIC_KERNEL, 32) is False
    assert exceptional_index_check(DESK_KERNEL, 64) is False
    with pytest.raises(ExceptionalIndexError) as info:
        exceptional_index_check(MemoryKernel.exponential_sum([(2.0, 1.0)]), 32)
    assert info.value.n == 1
    # alpha^2 > 1 without an exact collision only warns
    assert exceptional_index_check(
        MemoryKernel.exponential_sum([(3.0, 1.0)]), 32) is True


def test_derived_kernels_are_read_only(desk_kernels):
    with pytest.raises(ValueError):
        desk_kernels.stress_kernel[0] = 2.0
