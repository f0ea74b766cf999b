"""Wavelength-scale interference corrections.

Boundary profiles re-weight the direction-resolved boundary tallies by
(1 ± cos(k_n x̃_n)). Interior (weak-localization) corrections at the planes
x_n = x0n and x_n = H − x0n come from the coherent term alone and are
evaluated analytically: the two position deltas are integrated against the
(t, x⊥) cell, leaving a radial |K| quadrature.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .medium import MediumSpec, total_xsection
from .slab import BoundaryCondition, SlabConfig
from .source import InitialPulse, radial_amplitude, spectral_support
from .tally import PLANES, EnergyMatrix, TallySet

TANGENCY_SIN = math.sin(math.radians(5.0))


class Factor(enum.IntEnum):
    PLUS = 1    # 1 + cos
    MINUS = -1  # 1 − cos


@dataclass(frozen=True)
class BoundarySignLedger:
    factor_at_0: Factor
    factor_at_H: Factor
    interior_sign_x0: int
    interior_sign_Hx0: int


# Image signs are +1 for all images (NN, DD) or (−1)^j for translation image j
# (either mixed pair). The x_src plane pairs images j and −j (same parity),
# the mirror plane pairs j and −1−j (opposite parity).
_LEDGER = {
    BoundaryCondition.NEUMANN_NEUMANN: BoundarySignLedger(Factor.PLUS, Factor.PLUS, 1, 1),
    BoundaryCondition.DIRICHLET_DIRICHLET: BoundarySignLedger(Factor.MINUS, Factor.MINUS, 1, 1),
    BoundaryCondition.DIRICHLET_NEUMANN: BoundarySignLedger(Factor.MINUS, Factor.PLUS, 1, -1),
    BoundaryCondition.NEUMANN_DIRICHLET: BoundarySignLedger(Factor.PLUS, Factor.MINUS, 1, -1),
}


def ledger_for(bc) -> BoundarySignLedger:
    return _LEDGER[BoundaryCondition(bc)]


@dataclass
class ProfileReport:
    """Energy matrix versus stretched offset x̃_n at one plane and one time bin."""

    plane: str
    offsets: np.ndarray
    e_pp: np.ndarray
    e_vv: np.ndarray
    e_pv: np.ndarray
    baseline: EnergyMatrix
    onset_times: list = field(default_factory=list)
    time_bin: tuple = ()
    count: int = 0
    status: str = "ok"
    ill_conditioned: bool = False

    @property
    def values(self) -> list[EnergyMatrix]:
        return [EnergyMatrix(float(a), float(b), float(c)) for a, b, c in zip(self.e_pp, self.e_vv, self.e_pv)]

    @property
    def onset_in_bin(self) -> bool:
        if not self.time_bin:
            return False
        lo, hi = self.time_bin
        return any(lo <= t < hi for t in self.onset_times)


def default_offsets(scale_k: float, n: int = 64) -> np.ndarray:
    """64 offsets over [0, 6π/k0]."""
    return np.linspace(0.0, 6.0 * math.pi / scale_k, n)


# ---------------------------------------------------------------------------
# boundary layers
# ---------------------------------------------------------------------------


def _plane_weights(tallies: TallySet, plane: int, t_bin: int, r_bins=None):
    L = tallies.layout
    r_sel = slice(None) if r_bins is None else slice(r_bins[0], r_bins[1])
    W = tallies.plane_sum[plane, t_bin, r_sel].sum(axis=0)
    cnt = int(tallies.plane_cnt[plane, t_bin, r_sel].sum())
    dt = L.time_edges[t_bin + 1] - L.time_edges[t_bin]
    W = W / (dt * L.plane_thickness)
    mu_e = L.plane_mu_edges()
    mu_c = 0.5 * (mu_e[1:] + mu_e[:-1])
    k_c = 0.5 * (L.plane_k_edges[1:] + L.plane_k_edges[:-1])
    return W, cnt, mu_c, k_c


def boundary_profile(tallies: TallySet, spec: MediumSpec, slab: SlabConfig, which: str, t_bin: int,
                     offsets) -> ProfileReport:
    """E at the wall ``which`` ∈ {"0", "H"} versus x̃_n, x⊥-integrated over the whole plane.

    Each (μ, |K|) bin of the boundary tally is weighted by 𝔻 and by
    (1 ± cos(k_n x̃_n)) with k_n = |K| μ at the bin centre. The baseline is
    the same sum without that factor. At x̃_n = 0 the factor is exactly 2 or
    exactly 0, so the profile is exactly twice the baseline or exactly zero.
    """
    which = str(which)
    if which not in ("0", "H"):
        raise ValueError("which must be '0' or 'H'")
    plane = 0 if which == "0" else 1
    led = ledger_for(slab.bc)
    sign = int(led.factor_at_0 if which == "0" else led.factor_at_H)
    offsets = np.asarray(offsets, dtype=np.float64)
    W, cnt, mu_c, k_c = _plane_weights(tallies, plane, t_bin)
    L = tallies.layout
    tb = (float(L.time_edges[t_bin]), float(L.time_edges[t_bin + 1]))
    name = PLANES[plane]
    if cnt == 0:
        nan = np.full(offsets.shape, np.nan)
        return ProfileReport(name, offsets, nan, nan.copy(), nan.copy(), EnergyMatrix(np.nan, np.nan),
                             [], tb, 0, "insufficient statistics")
    base_pp = W * (1.0 / (k_c * k_c))[None, :]
    base_vv = W * (1.0 / spec.c0**2)
    baseline = EnergyMatrix(float(np.sum(base_pp)), float(np.sum(base_vv)), 0.0)
    kn = mu_c[:, None] * k_c[None, :]
    e_pp = np.empty(offsets.size)
    e_vv = np.empty(offsets.size)
    for i, x in enumerate(offsets):
        f = 1.0 + sign * np.cos(kn * x)
        e_pp[i] = np.sum(base_pp * f)
        e_vv[i] = np.sum(base_vv * f)
    return ProfileReport(name, offsets, e_pp, e_vv, np.zeros(offsets.size), baseline, [], tb, cnt)


# ---------------------------------------------------------------------------
# interior weak localization
# ---------------------------------------------------------------------------


def shell_distance(plane: str, j: int, H: float) -> float:
    """Normal distance d_j of image shell j: 2jH (x_src) or (2j+1)H (x_mirror)."""
    if plane == "x_src":
        return 2.0 * j * H
    if plane == "x_mirror":
        return (2.0 * j + 1.0) * H
    raise ValueError("plane must be 'x_src' or 'x_mirror'")


def onset_times(plane: str, slab: SlabConfig, spec: MediumSpec, j_max: int) -> list[float]:
    """Shell arrival times at x⊥ = x0⊥: 2jH/c0 (1 ≤ j ≤ j_max) or (2j+1)H/c0 (0 ≤ j ≤ j_max)."""
    if j_max < 0:
        raise ValueError("j_max must be >= 0")
    js = range(1, j_max + 1) if plane == "x_src" else range(0, j_max + 1)
    return [shell_distance(plane, j, slab.H) / spec.c0 for j in js]


_GL16 = np.polynomial.legendre.leggauss(16)


def _gl_panels(a: float, b: float, n_panels: int, rule=_GL16):
    x, w = rule
    edges = np.linspace(a, b, n_panels + 1)
    h = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    return (mid[:, None] + h[:, None] * x[None, :]).ravel(), (h[:, None] * w[None, :]).ravel()


@lru_cache(maxsize=32)
def radial_quadrature(spec: MediumSpec, pulse: InitialPulse, n_panels: int = 48):
    """|K| nodes and weights over the pulse support, with Σ and 𝔸 at the nodes."""
    lo, hi = spectral_support(pulse, spec)
    k, w = _gl_panels(lo, hi, n_panels)
    sig = np.array([total_xsection(spec, float(x)) for x in k])
    return k, w, sig, radial_amplitude(pulse, spec, k)


def shell_window(d: float, cell, t_lo: float, t_hi: float, c0: float):
    """Part of [t_lo, t_hi) during which the shell of normal offset d crosses the annulus."""
    r_lo, r_hi = cell
    a = max(t_lo, math.sqrt(r_lo * r_lo + d * d) / c0)
    b = min(t_hi, math.sqrt(r_hi * r_hi + d * d) / c0)
    return (a, b) if b > a else None


def localization_correction(slab: SlabConfig, spec: MediumSpec, pulse: InitialPulse, plane: str,
                            t_bin, cell, offsets, shells=None, t_panels: int = 8):
    """Unsigned interior correction (e_pp, e_vv, e_pv arrays), time-averaged over the bin.

    Sums the image series over positive and negative indices: shells ±d_j coincide, so
    the cosine terms double and the sine terms cancel exactly. Returns the
    three arrays, the onset times of contributing shells and a flag raised if
    any contributing shell is within 5° of tangency to the plane.
    """
    if not isinstance(pulse, InitialPulse):
        raise TypeError("the localization correction is built from the analytic coherent "
                        "spectrum of an InitialPulse; tallied spectra are not accepted")
    t_lo, t_hi = float(t_bin[0]), float(t_bin[1])
    if not t_hi > t_lo or t_lo < 0.0:
        raise ValueError("time bin must satisfy 0 <= t_lo < t_hi")
    c0 = spec.c0
    offsets = np.atleast_1d(np.asarray(offsets, dtype=np.float64))
    k, wk, sig, amp = radial_quadrature(spec, pulse)
    if shells is None:
        j0 = 1 if plane == "x_src" else 0
        shells = []
        j = j0
        while abs(shell_distance(plane, j, slab.H)) <= c0 * t_hi:
            shells.append(j)
            j += 1
    out = np.zeros((3, offsets.size))
    onsets = []
    flag = False
    for j in shells:
        d = shell_distance(plane, j, slab.H)
        if plane == "x_src" and j < 1 or plane == "x_mirror" and j < 0:
            raise ValueError("shell indices are j >= 1 (x_src) or j >= 0 (x_mirror)")
        win = shell_window(d, cell, t_lo, t_hi, c0)
        if win is None:
            continue
        onsets.append(abs(d) / c0)
        t, wt = _gl_panels(win[0], win[1], t_panels)
        mu = d / (c0 * t)
        if np.any(np.abs(mu) < TANGENCY_SIN):
            flag = True
        jac = wt * 2.0 * math.pi / (c0 * t)                         # (nt,)
        damp = np.exp(-np.outer(t, sig)) * (amp * k * k * wk)[None, :]  # (nt, nk)
        # series prefactor 2, times 2 for the coincident shells ±d (cosines add, sines cancel)
        for i, x in enumerate(offsets):
            c = np.cos(np.outer(mu, k) * x) * damp
            cj = c.T @ jac                                          # (nk,)
            out[0, i] += 4.0 * np.sum(cj / (k * k))
            out[1, i] += 4.0 * np.sum(cj) / (c0 * c0)
    out /= (t_hi - t_lo)
    return out, sorted(onsets), flag


def localization_profile(slab: SlabConfig, spec: MediumSpec, pulse: InitialPulse, plane: str,
                         t_bin, cell, offsets, tallies: TallySet | None = None, shells=None
                         ) -> ProfileReport:
    """Bulk E at the plane (from tallies, if given) plus the signed analytic correction.

    ``t_bin`` = (t_lo, t_hi) and ``cell`` = (r_lo, r_hi) is an annulus about
    x0⊥; both are integrated exactly over the deltas of the coherent term.
    """
    if plane not in ("x_src", "x_mirror"):
        raise ValueError("plane must be 'x_src' or 'x_mirror'")
    led = ledger_for(slab.bc)
    sign = led.interior_sign_x0 if plane == "x_src" else led.interior_sign_Hx0
    offsets = np.atleast_1d(np.asarray(offsets, dtype=np.float64))
    corr, onsets, flag = localization_correction(slab, spec, pulse, plane, t_bin, cell, offsets, shells)
    baseline = EnergyMatrix(0.0, 0.0, 0.0)
    count = 0
    if tallies is not None:
        baseline, count = plane_baseline(tallies, spec, PLANES.index(plane), t_bin, cell)
    return ProfileReport(plane, offsets, baseline.e_pp + sign * corr[0], baseline.e_vv + sign * corr[1],
                         baseline.e_pv + sign * corr[2], baseline, onsets,
                         (float(t_bin[0]), float(t_bin[1])), count, "ok", flag)


def plane_baseline(tallies: TallySet, spec: MediumSpec, plane: int, t_bin, cell) -> tuple[EnergyMatrix, int]:
    """Bulk E at an interior plane, integrated over the annulus ``cell`` (which must follow r edges)."""
    L = tallies.layout
    t_idx = int(np.searchsorted(L.time_edges, t_bin[0]))
    if not (np.isclose(L.time_edges[t_idx], t_bin[0]) and np.isclose(L.time_edges[t_idx + 1], t_bin[1])):
        raise ValueError("time bin must coincide with a tally time bin")
    r0 = int(np.searchsorted(L.r_edges, cell[0]))
    r1 = int(np.searchsorted(L.r_edges, cell[1]))
    if not (np.isclose(L.r_edges[r0], cell[0]) and r1 < L.r_edges.size and np.isclose(L.r_edges[r1], cell[1])):
        raise ValueError("transverse cell must coincide with tally radius edges")
    W, cnt, mu_c, k_c = _plane_weights(tallies, plane, t_idx, (r0, r1))
    return EnergyMatrix(float(np.sum(W * (1.0 / (k_c * k_c))[None, :])),
                        float(np.sum(W * (1.0 / spec.c0**2))), 0.0), cnt
