"""Initial pulse spectra and sampling of the initial phase-space density.

The pulse is an isotropic Gaussian envelope, optionally with a radial carrier
k0, giving an isotropic energy spectrum 𝔸(K) = 𝔸(|K|). Particles start at
x0 with |K| drawn from the radial marginal k²𝔸(k) discretized onto a fixed
set of wavenumber nodes, and a uniform direction.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._jit import inline_kernel, kernel
from .medium import MediumSpec
from .slab import Particle, SlabConfig

TWO_PI = 2.0 * math.pi


class EnvelopeKind(str, enum.Enum):
    NONE = "none"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True)
class InitialPulse:
    kind_A: EnvelopeKind
    kind_B: EnvelopeKind
    width: float
    amp_A: float
    amp_B: float
    carrier: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind_A", EnvelopeKind(self.kind_A))
        object.__setattr__(self, "kind_B", EnvelopeKind(self.kind_B))
        if not (math.isfinite(self.width) and self.width > 0.0):
            raise ValueError("pulse width must be finite and > 0")
        if not (math.isfinite(self.carrier) and self.carrier >= 0.0):
            raise ValueError("carrier wavenumber must be finite and >= 0")
        if not (math.isfinite(self.amp_A) and math.isfinite(self.amp_B)):
            raise ValueError("pulse amplitudes must be finite")
        if self.effective_A == 0.0 and self.effective_B == 0.0:
            raise ValueError("at least one of amp_A, amp_B must be nonzero with a non-none envelope")

    @property
    def effective_A(self) -> float:
        return self.amp_A if self.kind_A is EnvelopeKind.GAUSSIAN else 0.0

    @property
    def effective_B(self) -> float:
        return self.amp_B if self.kind_B is EnvelopeKind.GAUSSIAN else 0.0


def envelope_transform(pulse: InitialPulse, k):
    """ĝ(|K|) = (2πw²)^{3/2} exp(−w²(|K| − k0)²/2)."""
    k = np.asarray(k, dtype=np.float64)
    w = pulse.width
    return (TWO_PI * w * w) ** 1.5 * np.exp(-0.5 * w * w * (k - pulse.carrier) ** 2)


def radial_amplitude(pulse: InitialPulse, spec: MediumSpec, k):
    """𝔸 as a function of |K|: (B̂²/c0² + |K|²Â²) / (2(2π)³)."""
    k = np.asarray(k, dtype=np.float64)
    g = envelope_transform(pulse, k)
    b = pulse.effective_B * g / spec.c0
    a = pulse.effective_A * g * k
    return (b * b + a * a) / (2.0 * TWO_PI**3)


def amplitude_A(pulse: InitialPulse, spec: MediumSpec, K):
    """𝔸(K) for wavevector(s) of shape (..., 3)."""
    K = np.asarray(K, dtype=np.float64)
    return radial_amplitude(pulse, spec, np.sqrt(np.sum(K * K, axis=-1)))


def radial_density(pulse: InitialPulse, spec: MediumSpec, k):
    """4π k² 𝔸(k): energy per unit |K|."""
    k = np.asarray(k, dtype=np.float64)
    return 4.0 * math.pi * k * k * radial_amplitude(pulse, spec, k)


def spectral_support(pulse: InitialPulse, spec: MediumSpec, rel: float = 1e-17) -> tuple[float, float]:
    """Interval of |K| outside which the radial density is below ``rel`` of its peak."""
    hi = pulse.carrier + 40.0 / pulse.width
    k = np.linspace(0.0, hi, 40001)
    f = radial_density(pulse, spec, k)
    idx = np.nonzero(f > rel * f.max())[0]
    step = k[1] - k[0]
    return max(0.0, k[idx[0]] - step), k[idx[-1]] + step


def total_weight(pulse: InitialPulse, spec: MediumSpec) -> float:
    """Z = ∫𝔸(K) dK by radial quadrature."""
    lo, hi = spectral_support(pulse, spec)
    f = lambda k: float(radial_density(pulse, spec, k))
    pts = [min(max(pulse.carrier, lo), hi)] if lo < pulse.carrier < hi else None
    z = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400, points=pts)[0]
    if not (math.isfinite(z) and z > 0.0):
        raise ValueError("total source weight Z must be finite and > 0")
    return z


_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


class SourceSampler:
    """Discrete |K| nodes with their probabilities and a uniform direction law.

    The support is cut into ``n_nodes`` equal bins; each bin becomes one node
    placed at the bin's conditional mean |K| and carrying the bin's exact mass.
    """

    def __init__(self, pulse: InitialPulse, spec: MediumSpec, n_nodes: int = 128):
        self.pulse = pulse
        self.spec = spec
        self.Z = total_weight(pulse, spec)
        lo, hi = spectral_support(pulse, spec)
        self.edges = np.linspace(lo, hi, n_nodes + 1)
        h = 0.5 * np.diff(self.edges)
        mid = 0.5 * (self.edges[1:] + self.edges[:-1])
        pts = mid[:, None] + h[:, None] * _GL_X[None, :]
        f = radial_density(pulse, spec, pts) * _GL_W[None, :]
        mass = f.sum(axis=1) * h
        first = (f * pts).sum(axis=1) * h
        keep = mass > 0.0
        self.k = np.ascontiguousarray(np.where(keep, first / np.where(keep, mass, 1.0), mid))
        self.prob = mass / mass.sum()
        self.cdf = np.concatenate(([0.0], np.cumsum(self.prob)))
        self.cdf[-1] = 1.0

    @property
    def mean_k(self) -> float:
        return float(np.dot(self.prob, self.k))


@inline_kernel
def sample_source(cdf, u_node, u_mu, u_phi):
    """Node index and a uniform direction from three uniforms."""
    lo = 0
    hi = cdf.size - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if cdf[mid] <= u_node:
            lo = mid
        else:
            hi = mid
    mu = 2.0 * u_mu - 1.0
    st = math.sqrt(max(0.0, 1.0 - mu * mu))
    phi = TWO_PI * u_phi
    return lo, st * math.cos(phi), st * math.sin(phi), mu


def sample_initial_states(sampler: SourceSampler, slab: SlabConfig, rng, n: int, n_particles: int | None = None):
    """Arrays (k, directions) for ``n`` particles plus the common weight Z/n_particles."""
    n_particles = n if n_particles is None else n_particles
    u = rng.random((n, 3))
    idx = np.clip(np.searchsorted(sampler.cdf, u[:, 0], side="right") - 1, 0, sampler.k.size - 1)
    mu = 2.0 * u[:, 1] - 1.0
    st = np.sqrt(np.maximum(0.0, 1.0 - mu * mu))
    phi = TWO_PI * u[:, 2]
    dirs = np.stack([st * np.cos(phi), st * np.sin(phi), mu], axis=-1)
    return sampler.k[idx], dirs, sampler.Z / n_particles


def sample_initial_state(pulse: InitialPulse, spec: MediumSpec, slab: SlabConfig, rng,
                         n_particles: int, sampler: SourceSampler | None = None) -> Particle:
    """One particle at x0, time 0, weight Z/n_particles, K drawn from 𝔸(K)/Z."""
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    sampler = sampler or SourceSampler(pulse, spec)
    k, d, w = sample_initial_states(sampler, slab, rng, 1, n_particles)
    return Particle(position=np.array(slab.x0), K=k[0] * d[0], weight=w)
