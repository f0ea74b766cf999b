import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from slabrt import CounterRNG, InitialPulse, SlabConfig
from slabrt.oracle import envelope_transform_by_quadrature, radial_mean_k
from slabrt.source import (SourceSampler, amplitude_A, envelope_transform, radial_amplitude, sample_initial_state,
                           sample_initial_states, sample_source, total_weight)

SLAB = SlabConfig(1.0, "neumann-neumann", (0.0, 0.0, 0.5))


def test_amplitude_at_zero(gauss):
    pulse = InitialPulse("none", "gaussian", 1.0, 0.0, 1.0)
    v = float(amplitude_A(pulse, gauss, [0.0, 0.0, 0.0]))
    assert v == pytest.approx(0.5, rel=1e-15)
    b0 = envelope_transform_by_quadrature(1.0, 0.0)
    assert b0 * b0 / (2 * (2 * math.pi) ** 3) == pytest.approx(0.5, rel=1e-10)
    print(f"𝔸(0) = {v}")


@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
def test_envelope_transform_vs_quadrature(k):
    p = InitialPulse("gaussian", "none", 0.8, 1.0, 0.0)
    assert float(envelope_transform(p, k)) == pytest.approx(envelope_transform_by_quadrature(0.8, k), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(-30, 30), st.floats(-30, 30), st.floats(-30, 30))
def test_amplitude_even_and_nonnegative(a, b, c):
    from slabrt import MediumSpec, CorrelationModel
    spec = MediumSpec(1.2, CorrelationModel("gaussian", 1.0, 1.0))
    p = InitialPulse("gaussian", "gaussian", 0.3, 0.7, -1.1, 4.0)
    v = amplitude_A(p, spec, [a, b, c])
    assert v >= 0.0
    assert amplitude_A(p, spec, [-a, -b, -c]) == v


def test_amplitude_nonnegative_grid(gauss):
    p = InitialPulse("gaussian", "gaussian", 0.5, 2.0, -3.0, 5.0)
    K = np.stack(np.meshgrid(*[np.linspace(-20, 20, 10)] * 3), axis=-1).reshape(-1, 3)
    assert np.all(amplitude_A(p, gauss, K) >= 0.0)


def test_invalid_pulses():
    with pytest.raises(ValueError):
        InitialPulse("gaussian", "gaussian", 1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        InitialPulse("none", "none", 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        InitialPulse("gaussian", "none", 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        InitialPulse("gaussian", "none", 1.0, 1.0, 0.0, carrier=-1.0)


def test_sampler_mass_and_mean(gauss):
    p = InitialPulse("none", "gaussian", 1.0, 0.0, 1.0)
    s = SourceSampler(p, gauss)
    assert s.Z == pytest.approx(total_weight(p, gauss), rel=1e-12)
    assert s.cdf[-1] == 1.0 and np.all(np.diff(s.cdf) >= 0)
    assert s.mean_k == pytest.approx(2 / math.sqrt(math.pi), rel=1e-12)
    assert radial_mean_k(p, gauss) == pytest.approx(2 / math.sqrt(math.pi), rel=1e-10)


def test_sampled_mean_k(gauss):
    p = InitialPulse("none", "gaussian", 1.0, 0.0, 1.0)
    s = SourceSampler(p, gauss)
    k, d, w = sample_initial_states(s, SLAB, CounterRNG(17), 1_000_000)
    se = k.std() / math.sqrt(k.size)
    exact = radial_mean_k(p, gauss)
    print(f"mean |K| = {k.mean():.6f} ± {se:.6f}; analytic {exact:.6f}")
    assert abs(k.mean() - exact) < 3 * se
    assert w * k.size == pytest.approx(s.Z, rel=1e-15)


def test_directions_uniform(gauss, pulse_k3):
    s = SourceSampler(pulse_k3, gauss)
    _, d, _ = sample_initial_states(s, SLAB, CounterRNG(3), 1_000_000)
    for c in range(3):
        assert stats.kstest(d[:, c], stats.uniform(-1, 2).cdf).pvalue > 1e-3
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-15)


def test_kernel_matches_numpy_sampling(gauss, pulse_k3):
    s = SourceSampler(pulse_k3, gauss)
    u = CounterRNG(4).random((300, 3))
    k, d, _ = sample_initial_states(s, SLAB, CounterRNG(4), 300)
    for i in range(300):
        node, ux, uy, uz = sample_source(s.cdf, *u[i])
        assert s.k[node] == k[i]
        assert (ux, uy, uz) == tuple(d[i])


def test_single_particle(gauss, pulse_k3):
    p = sample_initial_state(pulse_k3, gauss, SLAB, CounterRNG(0), 10)
    assert np.array_equal(p.position, [0.0, 0.0, 0.5])
    assert p.time == 0.0 and p.n_scatters == 0
    assert p.weight == pytest.approx(total_weight(pulse_k3, gauss) / 10, rel=1e-12)
    with pytest.raises(ValueError):
        sample_initial_state(pulse_k3, gauss, SLAB, CounterRNG(0), 0)


def test_carrier_shifts_spectrum(gauss):
    p = InitialPulse("gaussian", "none", 0.15, 1.0, 0.0, 20.0)
    s = SourceSampler(p, gauss)
    assert 20.0 < s.mean_k < 24.0
    assert float(radial_amplitude(p, gauss, 20.0)) > float(radial_amplitude(p, gauss, 5.0))
