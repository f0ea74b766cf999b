"""Random-medium statistics and the elastic scattering kernel.

The medium enters only through the power spectrum R̂(p) of its fluctuations.
From it we build the differential cross-section σ(K, q), the total
cross-section Σ(k), and per-wavenumber inverse-CDF tables for the polar
cosine of a scattering event.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from ._jit import inline_kernel, kernel

TWO_PI = 2.0 * math.pi
# π/(2(2π)³): prefactor shared by σ and Σ
XS_PREFACTOR = math.pi / (2.0 * TWO_PI**3)


class CorrelationKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class CorrelationModel:
    """Isotropic correlation r(|x|) of the medium fluctuations.

    ``strength`` is the standard deviation s (variance s²), ``corr_length``
    the correlation length ℓ_c.
    """

    kind: CorrelationKind
    strength: float
    corr_length: float

    def __post_init__(self):
        object.__setattr__(self, "kind", CorrelationKind(self.kind))
        if not (math.isfinite(self.strength) and self.strength >= 0.0):
            raise ValueError("correlation strength must be finite and >= 0")
        if not (math.isfinite(self.corr_length) and self.corr_length > 0.0):
            raise ValueError("correlation length must be finite and > 0")


@dataclass(frozen=True)
class MediumSpec:
    c0: float
    correlation: CorrelationModel

    def __post_init__(self):
        if not (math.isfinite(self.c0) and self.c0 > 0.0):
            raise ValueError("background speed c0 must be finite and > 0")


# ---------------------------------------------------------------------------
# spectra and cross-sections
# ---------------------------------------------------------------------------


def radial_power_spectrum(model: CorrelationModel, p):
    """R̂ as a function of |p|."""
    p = np.asarray(p, dtype=np.float64)
    s2 = model.strength**2
    ell = model.corr_length
    if model.kind is CorrelationKind.GAUSSIAN:
        return s2 * TWO_PI**1.5 * ell**3 * np.exp(-0.5 * ell * ell * p * p)
    return s2 * 8.0 * math.pi * ell**3 / (1.0 + ell * ell * p * p) ** 2


def power_spectrum(model: CorrelationModel, p):
    """R̂(p) for wavevector(s) ``p`` with shape (..., 3).

    Only squared components enter, so flipping the sign of any component
    returns the identical float.
    """
    p = np.asarray(p, dtype=np.float64)
    return radial_power_spectrum(model, np.sqrt(np.sum(p * p, axis=-1)))


def differential_xsection(spec: MediumSpec, K, q):
    """σ(K, q) = π c0² |K|² R̂(K − q) / (2(2π)³)."""
    K = np.asarray(K, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    k2 = np.sum(K * K, axis=-1)
    if np.any(k2 == 0.0):
        raise ValueError("differential cross-section is undefined at |K| = 0")
    return XS_PREFACTOR * spec.c0**2 * k2 * power_spectrum(spec.correlation, K - q)


def mu_density(model: CorrelationModel, k: float, mu):
    """Unnormalized density of the scattering cosine: R̂(k √(2(1−μ)))."""
    mu = np.asarray(mu, dtype=np.float64)
    return radial_power_spectrum(model, k * np.sqrt(np.maximum(2.0 * (1.0 - mu), 0.0)))


def _mu_integral(model: CorrelationModel, k: float) -> float:
    f = lambda mu: float(mu_density(model, k, mu))
    # the Gaussian kernel concentrates within ~1/(ℓk)² of μ = 1; give quad the split
    width = 1.0 / max((model.corr_length * k) ** 2, 1.0)
    split = max(-1.0, 1.0 - 40.0 * width)
    val = 0.0
    if split > -1.0:
        val += integrate.quad(f, -1.0, split, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    val += integrate.quad(f, split, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)[0]
    return val


@lru_cache(maxsize=4096)
def _total_xsection_cached(spec: MediumSpec, k: float) -> float:
    if k == 0.0 or spec.correlation.strength == 0.0:
        return 0.0
    return XS_PREFACTOR * spec.c0 * k**4 * TWO_PI * _mu_integral(spec.correlation, k)


def total_xsection(spec: MediumSpec, k) -> float | np.ndarray:
    """Σ(k), the total scattering rate at wavenumber k (adaptive quadrature over μ)."""
    if np.ndim(k) == 0:
        k = float(k)
        if not (math.isfinite(k) and k >= 0.0):
            raise ValueError("wavenumber must be finite and >= 0")
        return _total_xsection_cached(spec, k)
    return np.array([total_xsection(spec, float(x)) for x in np.ravel(k)]).reshape(np.shape(k))


# ---------------------------------------------------------------------------
# inverse-CDF tables for the scattering cosine
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _cell_masses(model, k, a, b, n):
    """Exact-to-GL mass of the μ-density on ``n`` equal cells of [a, b]."""
    edges = np.linspace(a, b, n + 1)
    h = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    pts = mid[:, None] + h[:, None] * _GL_X[None, :]
    return edges, np.sum(mu_density(model, k, pts) * _GL_W[None, :], axis=1) * h


def build_mu_table(model: CorrelationModel, k: float, n_nodes: int = 4096):
    """Nodes (F, μ, dμ/dF) of the inverse CDF of the scattering cosine.

    The grid is uniform in μ over the range carrying all but ~1e-16 of the
    mass; the inverse is the monotone (PCHIP) cubic through the nodes.
    """
    n = n_nodes - 1
    _, m = _cell_masses(model, k, -1.0, 1.0, n)
    tot = m.sum()
    if not (tot > 0.0 and math.isfinite(tot)):
        raise ValueError("no scattering channel at this wavenumber")
    below = np.cumsum(m) / tot
    lo = int(np.searchsorted(below, 1e-16))
    mu_min = -1.0 + 2.0 * lo / n
    edges, m = _cell_masses(model, k, mu_min, 1.0, n)
    F = np.concatenate(([0.0], np.cumsum(m)))
    F /= F[-1]
    F[-1] = 1.0
    keep = np.concatenate(([True], np.diff(F) > 0.0))
    keep[-1] = True
    F, mu = F[keep], edges[keep]
    if F[-2] >= 1.0:
        F, mu = F[:-1], mu[:-1]
        F[-1], mu[-1] = 1.0, 1.0
    slope = PchipInterpolator(F, mu).derivative()(F)
    return F, mu, slope


class ScatterTable:
    """Stacked μ tables and Σ values for a set of wavenumber nodes.

    Rows are padded to a common length; ``length[i]`` gives the valid count.
    """

    def __init__(self, spec: MediumSpec, k_nodes, n_nodes: int = 4096):
        self.spec = spec
        self.k = np.ascontiguousarray(k_nodes, dtype=np.float64)
        nk = self.k.size
        self.sigma = np.array([total_xsection(spec, float(x)) for x in self.k])
        self.F = np.ones((nk, n_nodes))
        self.mu = np.ones((nk, n_nodes))
        self.slope = np.zeros((nk, n_nodes))
        self.length = np.zeros(nk, dtype=np.int64)
        for i, kk in enumerate(self.k):
            if self.sigma[i] <= 0.0:
                self.length[i] = 0
                continue
            F, mu, s = build_mu_table(spec.correlation, float(kk), n_nodes)
            L = F.size
            self.F[i, :L], self.mu[i, :L], self.slope[i, :L] = F, mu, s
            self.length[i] = L


@inline_kernel
def sample_mu(F, mu, slope, length, row, u):
    """Invert the tabulated CDF of row ``row`` at ``u`` with cubic Hermite interpolation."""
    lo = 0
    hi = length[row] - 1
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if F[row, mid] <= u:
            lo = mid
        else:
            hi = mid
    h = F[row, hi] - F[row, lo]
    s = (u - F[row, lo]) / h
    s2 = s * s
    s3 = s2 * s
    val = ((2.0 * s3 - 3.0 * s2 + 1.0) * mu[row, lo]
           + (s3 - 2.0 * s2 + s) * h * slope[row, lo]
           + (-2.0 * s3 + 3.0 * s2) * mu[row, hi]
           + (s3 - s2) * h * slope[row, hi])
    if val > 1.0:
        val = 1.0
    elif val < -1.0:
        val = -1.0
    return val


def sample_mu_np(F, mu, slope, u):
    """Vectorized counterpart of ``sample_mu`` for a single table row."""
    u = np.asarray(u, dtype=np.float64)
    lo = np.clip(np.searchsorted(F, u, side="right") - 1, 0, F.size - 2)
    hi = lo + 1
    h = F[hi] - F[lo]
    s = (u - F[lo]) / h
    s2 = s * s
    s3 = s2 * s
    val = ((2.0 * s3 - 3.0 * s2 + 1.0) * mu[lo]
           + (s3 - 2.0 * s2 + s) * h * slope[lo]
           + (-2.0 * s3 + 3.0 * s2) * mu[hi]
           + (s3 - s2) * h * slope[hi])
    return np.clip(val, -1.0, 1.0)


# ---------------------------------------------------------------------------
# direction update
# ---------------------------------------------------------------------------


@inline_kernel
def rotate_direction(ux, uy, uz, mu, u_phi, parity):
    """Turn unit vector û by polar cosine ``mu`` and azimuth 2π·u_phi.

    The first frame vector is built from x̂ (or ŷ when û is nearly along x̂)
    and so commutes with the mirror z → −z; the second is û × e1, which
    flips sign under the mirror. Negating the azimuth sine on odd ``parity``
    therefore makes the result for a mirrored direction the exact mirror
    image of the result for the original one.
    """
    if abs(ux) < 0.9:
        ax, ay, az = 1.0 - ux * ux, -ux * uy, -ux * uz
    else:
        ax, ay, az = -uy * ux, 1.0 - uy * uy, -uy * uz
    na = math.sqrt(ax * ax + ay * ay + az * az)
    ax /= na
    ay /= na
    az /= na
    bx = uy * az - uz * ay
    by = uz * ax - ux * az
    bz = ux * ay - uy * ax
    phi = TWO_PI * u_phi
    c = math.cos(phi)
    s = math.sin(phi)
    if parity & 1:
        s = -s
    st = math.sqrt(max(0.0, 1.0 - mu * mu))
    vx = mu * ux + st * (c * ax + s * bx)
    vy = mu * uy + st * (c * ay + s * by)
    vz = mu * uz + st * (c * az + s * bz)
    nv = math.sqrt(vx * vx + vy * vy + vz * vz)
    return vx / nv, vy / nv, vz / nv


def rotate_directions_np(u, mu, u_phi):
    """Vectorized ``rotate_direction`` (parity 0) for arrays of shape (n, 3) and (n,)."""
    u = np.asarray(u, dtype=np.float64)
    ux, uy, uz = u[..., 0], u[..., 1], u[..., 2]
    near_x = np.abs(ux) >= 0.9
    ax = np.where(near_x, -uy * ux, 1.0 - ux * ux)
    ay = np.where(near_x, 1.0 - uy * uy, -ux * uy)
    az = np.where(near_x, -uy * uz, -ux * uz)
    na = np.sqrt(ax * ax + ay * ay + az * az)
    ax, ay, az = ax / na, ay / na, az / na
    bx = uy * az - uz * ay
    by = uz * ax - ux * az
    bz = ux * ay - uy * ax
    phi = TWO_PI * np.asarray(u_phi)
    c, s = np.cos(phi), np.sin(phi)
    st = np.sqrt(np.maximum(0.0, 1.0 - mu * mu))
    v = np.stack([mu * ux + st * (c * ax + s * bx),
                  mu * uy + st * (c * ay + s * by),
                  mu * uz + st * (c * az + s * bz)], axis=-1)
    return v / np.sqrt(np.sum(v * v, axis=-1))[..., None]


@lru_cache(maxsize=64)
def _single_table(spec: MediumSpec, k: float):
    return build_mu_table(spec.correlation, k)


def sample_scatter_directions(spec: MediumSpec, k: float, incoming, n: int, rng):
    """Draw ``n`` outgoing directions for wavenumber ``k`` and a fixed incoming direction.

    ``rng`` is anything with a numpy-style ``random(size)`` method. Two uniforms
    are consumed per direction: the cosine first, then the azimuth.
    """
    k = float(k)
    if not k > 0.0 or total_xsection(spec, k) <= 0.0:
        raise ValueError("no scattering channel: total cross-section is zero")
    u_in = np.asarray(incoming, dtype=np.float64)
    u_in = u_in / np.linalg.norm(u_in)
    F, mu_nodes, slope = _single_table(spec, k)
    draws = rng.random((n, 2))
    mu = sample_mu_np(F, mu_nodes, slope, draws[:, 0])
    return rotate_directions_np(np.broadcast_to(u_in, (n, 3)), mu, draws[:, 1])


def sample_scatter_direction(spec: MediumSpec, k: float, incoming, rng) -> np.ndarray:
    """One outgoing unit direction; see ``sample_scatter_directions``."""
    return sample_scatter_directions(spec, k, incoming, 1, rng)[0]
