"""Independent reference computations used to check the production paths.

* closed-form and Monte-Carlo total cross-sections;
* an unfolded reference transport that never reflects: it follows the
  particle in the infinite medium and folds coordinates only when depositing;
* exact replay of recorded flight segments into a tally cell;
* a smoothed-delta evaluation of the interior interference correction and of
  the coherent amplitude, extrapolated to zero smoothing width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from ._jit import inline_kernel, kernel
from .medium import XS_PREFACTOR, CorrelationKind, MediumSpec, differential_xsection, rotate_direction, sample_mu
from .rng import next_uniform, seed_key
from .slab import SlabConfig
from .source import InitialPulse, radial_amplitude, spectral_support
from .tally import TICKS_PER_H, TallySet, deposit_subsegment
from .transport import Problem, account_unscattered, fold_in_cell, simulate

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# cross-sections
# ---------------------------------------------------------------------------


def sigma_closed_form(spec: MediumSpec, k):
    """Σ(k) from the exact μ-integral of the two supported spectra."""
    k = np.asarray(k, dtype=np.float64)
    m = spec.correlation
    s2, l = m.strength**2, m.corr_length
    x = (l * k) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        if m.kind is CorrelationKind.GAUSSIAN:
            I = s2 * TWO_PI**1.5 * l**3 * np.where(x > 0, -np.expm1(-2.0 * x) / np.where(x > 0, x, 1.0), 2.0)
        else:
            I = 8.0 * math.pi * s2 * l**3 * 2.0 / (1.0 + 4.0 * x)
    return XS_PREFACTOR * spec.c0 * k**4 * TWO_PI * I


def sigma_by_mu_quadrature(spec: MediumSpec, k: float, epsrel: float = 1e-13) -> float:
    """Σ(k) = (2πk²/c0) ∫ σ(K, q(μ)) dμ over the elastic sphere, by adaptive quadrature in μ."""
    from scipy.integrate import quad
    K = np.array([0.0, 0.0, k])

    def f(mu):
        q = k * np.array([math.sqrt(max(0.0, 1.0 - mu * mu)), 0.0, mu])
        return float(differential_xsection(spec, K, q))

    val = quad(f, -1.0, 1.0, epsabs=0.0, epsrel=epsrel, limit=500)[0]
    return TWO_PI * k * k / spec.c0 * val


def sigma_by_monte_carlo(spec: MediumSpec, k: float, n: int, rng, batch: int = 1 << 16):
    """Σ(k) = ∫σ(K, q) δ(c0|q| − c0|K|) dq with q uniform on the sphere |q| = k.

    Returns (estimate, standard error).
    """
    K = np.array([0.0, 0.0, float(k)])
    s1 = s2 = 0.0
    done = 0
    while done < n:
        m = min(batch, n - done)
        u = rng.random((m, 2))
        mu = 2.0 * u[:, 0] - 1.0
        st = np.sqrt(np.maximum(0.0, 1.0 - mu * mu))
        phi = TWO_PI * u[:, 1]
        q = k * np.stack([st * np.cos(phi), st * np.sin(phi), mu], axis=-1)
        # dq = k² dΩ d|q|; the delta contributes 1/c0
        f = differential_xsection(spec, K, q) * (4.0 * math.pi * k * k / spec.c0)
        s1 += float(f.sum())
        s2 += float((f * f).sum())
        done += m
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    return mean, math.sqrt(var / n)


# ---------------------------------------------------------------------------
# unfolded reference transport
# ---------------------------------------------------------------------------

N_REC = 12  # t0, s_a, s_b, z_a, z_b (folded ticks), px, py, wx, wy, μ_n, |K|, weight


@inline_kernel
def _record(rec, nrec, t, sa, sb, za, zb, px, py, wx, wy, mu_f, k, w):
    i = nrec[0]
    if i < rec.shape[0]:
        rec[i, 0] = t
        rec[i, 1] = sa
        rec[i, 2] = sb
        rec[i, 3] = float(za)
        rec[i, 4] = float(zb)
        rec[i, 5] = px
        rec[i, 6] = py
        rec[i, 7] = wx
        rec[i, 8] = wy
        rec[i, 9] = mu_f
        rec[i, 10] = k
        rec[i, 11] = w
    nrec[0] = i + 1


@kernel
def _unfolded_chunk(first, count, key0, key1,
                    src_cdf, node_k, node_sigma, node_kbin, node_pkbin, weight,
                    tab_F, tab_mu, tab_slope, tab_len,
                    c0, scale, Ht, z0, T,
                    t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo, slice_hi, census,
                    main_sum, main_ik2, main_cnt, plane_sum, plane_cnt, mu_batch,
                    coh_time, census_coh, buf, st, cache, rec, nrec):
    for ip in range(first, first + count):
        st[0] = 0
        u1 = next_uniform(key0, key1, ip, st, cache)
        u2 = next_uniform(key0, key1, ip, st, cache)
        u3 = next_uniform(key0, key1, ip, st, cache)
        lo = 0
        hi = src_cdf.size - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if src_cdf[mid] <= u1:
                lo = mid
            else:
                hi = mid
        node = lo
        mu0 = 2.0 * u2 - 1.0
        s0 = math.sqrt(max(0.0, 1.0 - mu0 * mu0))
        ux = s0 * math.cos(TWO_PI * u3)
        uy = s0 * math.sin(TWO_PI * u3)
        uz = mu0
        k = node_k[node]
        sig = node_sigma[node]
        kb = node_kbin[node]
        pkb = node_pkbin[node]
        inv_k2 = 1.0 / (k * k)
        px = 0.0
        py = 0.0
        y = z0          # unfolded normal tick
        ca = np.int64(0)  # image cell holding y
        t = 0.0
        nsc = 0
        while True:
            if sig > 0.0:
                tau = -math.log(next_uniform(key0, key1, ip, st, cache)) / sig
            else:
                tau = math.inf
            last = t + tau >= T
            dt = T - t if last else tau
            if nsc == 0:
                account_unscattered(t, dt, weight, t_edges, census, coh_time, census_coh)
            d = np.int64(np.rint(((c0 * dt) * uz) * scale))
            y_end = y + d
            wx = c0 * ux
            wy = c0 * uy
            ok = True
            c = ca
            ya = y
            sa = 0.0
            if d > 0:
                m = ca + 1
                while m * Ht < y_end:
                    wall = m * Ht
                    sw = dt * (float(wall - y) / float(d))
                    mu_f = uz if c % 2 == 0 else -uz
                    za = fold_in_cell(ya, c, Ht)
                    zb = fold_in_cell(wall, c, Ht)
                    _record(rec, nrec, t, sa, sw, za, zb, px, py, wx, wy, mu_f, k, weight)
                    ok &= deposit_subsegment(t, sa, sw, za, zb, px, py, wx, wy, mu_f, kb, pkb, weight,
                                             t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo,
                                             slice_hi, main_sum, main_ik2, main_cnt, inv_k2,
                                             plane_sum, plane_cnt, mu_batch, buf)
                    c = m
                    ya = wall
                    sa = sw
                    m += 1
            elif d < 0:
                m = ca
                while m * Ht > y_end:
                    wall = m * Ht
                    sw = dt * (float(wall - y) / float(d))
                    mu_f = uz if c % 2 == 0 else -uz
                    za = fold_in_cell(ya, c, Ht)
                    zb = fold_in_cell(wall, c, Ht)
                    _record(rec, nrec, t, sa, sw, za, zb, px, py, wx, wy, mu_f, k, weight)
                    ok &= deposit_subsegment(t, sa, sw, za, zb, px, py, wx, wy, mu_f, kb, pkb, weight,
                                             t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo,
                                             slice_hi, main_sum, main_ik2, main_cnt, inv_k2,
                                             plane_sum, plane_cnt, mu_batch, buf)
                    c = m - 1
                    ya = wall
                    sa = sw
                    m -= 1
            mu_f = uz if c % 2 == 0 else -uz
            za = fold_in_cell(ya, c, Ht)
            zb = fold_in_cell(y_end, c, Ht)
            _record(rec, nrec, t, sa, dt, za, zb, px, py, wx, wy, mu_f, k, weight)
            ok &= deposit_subsegment(t, sa, dt, za, zb, px, py, wx, wy, mu_f, kb, pkb, weight,
                                     t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo, slice_hi,
                                     main_sum, main_ik2, main_cnt, inv_k2, plane_sum, plane_cnt,
                                     mu_batch, buf)
            if not ok:
                return ip
            y = y_end
            ca = c
            px += wx * dt
            py += wy * dt
            if last:
                break
            t += dt
            mu = sample_mu(tab_F, tab_mu, tab_slope, tab_len, node,
                           next_uniform(key0, key1, ip, st, cache))
            uphi = next_uniform(key0, key1, ip, st, cache)
            # no reflections happen here, so the frame is never mirrored
            ux, uy, uz = rotate_direction(ux, uy, uz, mu, uphi, 0)
            nsc += 1
    return -1


_NO_REC = np.zeros((0, N_REC))


def unfolded_chunk(*args):
    """Drop-in replacement for ``transport.transport_chunk`` (no recording)."""
    return _unfolded_chunk(*args, _NO_REC, np.zeros(1, dtype=np.int64))


def unfolded_reference_run(prob: Problem, n_particles: int, T: float, seed: int,
                           chunk_size: int = 10000) -> TallySet:
    """Same histories as ``transport.simulate`` with the same chunking, tallied by the unfolded walk."""
    return simulate(prob, n_particles, T, seed, chunk_size, 1, chunk_kernel=unfolded_chunk)


def record_tracks(prob: Problem, n_particles: int, T: float, seed: int, max_segments: int = 1 << 20):
    """Run the unfolded walk on all particles and return (tallies, segments).

    ``segments`` has one row per folded straight piece (columns as ``N_REC``);
    a ValueError is raised if ``max_segments`` is too small.
    """
    rec = np.zeros((max_segments, N_REC))
    nrec = np.zeros(1, dtype=np.int64)

    def chunk(*args):
        return _unfolded_chunk(*args, rec, nrec)

    tallies = simulate(prob, n_particles, T, seed, chunk_size=n_particles, chunk_kernel=chunk)
    if nrec[0] > max_segments:
        raise ValueError(f"{nrec[0]} segments recorded; raise max_segments")
    return tallies, rec[:nrec[0]].copy()


def tally_mismatches(a: TallySet, b: TallySet) -> list[str]:
    """Names of tally arrays that are not bit-identical (shape, dtype and bytes)."""
    out = []
    bb = b.arrays()
    for name, x in a.arrays().items():
        y = bb[name]
        if x.shape != y.shape or x.dtype != y.dtype or x.tobytes() != y.tobytes():
            out.append(name)
    return out


def _interval_len(a, b):
    return np.maximum(b - a, 0.0)


def replay_energy_density(segments: np.ndarray, layout, H: float, t_bin: int, r_bin: int, z_bin: int):
    """Exact ∫w dt and ∫w/|K|² dt over the main-grid cell (t_bin, r_bin, z_bin), all μ and |K| bins.

    Each segment's time in the cell is the length of the intersection of its
    time span with the bin, the z-range preimage and the annulus preimage
    (roots of the quadratic |p + w s|² = r²). Nothing is shared with the
    deposit kernel except the tick grid of the z edges.
    """
    seg = np.asarray(segments, dtype=np.float64)
    t0, sa, sb, za, zb, px, py, wx, wy, muf, k, w = seg.T
    scale = TICKS_PER_H / H
    keep = ((muf >= layout.mu_edges[0]) & (muf <= layout.mu_edges[-1])
            & (k >= layout.k_edges[0]) & (k <= layout.k_edges[-1]) & (sb > sa))
    lo = np.maximum(sa, layout.time_edges[t_bin] - t0)
    hi = np.minimum(sb, layout.time_edges[t_bin + 1] - t0)
    # x_n preimage
    zl = float(np.rint(layout.z_edges[z_bin] * scale))
    zh = float(np.rint(layout.z_edges[z_bin + 1] * scale))
    dz = zb - za
    dur = sb - sa
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = sa + (zl - za) / dz * dur
        s2 = sa + (zh - za) / dz * dur
    moving = dz != 0.0
    zlo_s = np.where(moving, np.minimum(s1, s2), -np.inf)
    zhi_s = np.where(moving, np.maximum(s1, s2), np.inf)
    still_in = (za >= zl) & (za < zh)
    zlo_s = np.where(~moving & ~still_in, np.inf, zlo_s)
    lo = np.maximum(lo, zlo_s)
    hi = np.minimum(hi, zhi_s)

    def disc_window(r):
        # s with |p + w s|² < r²
        A = wx * wx + wy * wy
        B = px * wx + py * wy
        C = px * px + py * py - r * r
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = B * B - A * C
            sq = np.sqrt(np.maximum(disc, 0.0))
            a = (-B - sq) / A
            b = (-B + sq) / A
        a = np.where(A > 0, np.where(disc > 0, a, np.inf), np.where(C < 0, -np.inf, np.inf))
        b = np.where(A > 0, np.where(disc > 0, b, -np.inf), np.where(C < 0, np.inf, -np.inf))
        return a, b

    ra, rb = disc_window(layout.r_edges[r_bin + 1])
    lo_o = np.maximum(lo, ra)
    hi_o = np.minimum(hi, rb)
    inner = _interval_len(lo_o, hi_o)
    if layout.r_edges[r_bin] > 0.0:
        qa, qb = disc_window(layout.r_edges[r_bin])
        inner = inner - _interval_len(np.maximum(lo_o, qa), np.minimum(hi_o, qb))
    dt_in = np.where(keep, np.maximum(inner, 0.0), 0.0)
    return float(np.sum(w * dt_in)), float(np.sum(w * dt_in / (k * k)))


# ---------------------------------------------------------------------------
# smoothed-delta quadrature
# ---------------------------------------------------------------------------


@dataclass
class OracleResult:
    value: np.ndarray
    error: np.ndarray
    converged: bool
    etas: list = field(default_factory=list)
    per_eta: list = field(default_factory=list)
    observed_order: float = float("nan")


def _gl(a: float, b: float, n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    h = 0.5 * (b - a)
    return 0.5 * (a + b) + h * x, h * w


def _panels(breaks, n):
    b = np.unique(np.asarray(breaks, dtype=np.float64))
    xs, ws = [], []
    for a, c in zip(b[:-1], b[1:]):
        if c > a:
            x, w = _gl(a, c, n)
            xs.append(x)
            ws.append(w)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def _annulus_prob(rho, r_lo, r_hi, eta):
    """P(r_lo ≤ |ρ ê + η N₂| < r_hi) for a standard 2-D normal N₂ (Rice law)."""
    nc = (rho / eta) ** 2
    hi = stats.ncx2.cdf((r_hi / eta) ** 2, 2, nc) if math.isfinite(r_hi) else np.ones_like(nc)
    lo = stats.ncx2.cdf((r_lo / eta) ** 2, 2, nc) if r_lo > 0.0 else np.zeros_like(nc)
    return hi - lo


def _oracle_k_nodes(spec: MediumSpec, pulse: InitialPulse, n_panels: int = 64, amplitude=None):
    lo, hi = spectral_support(pulse, spec)
    k, w = _panels(np.linspace(lo, hi, n_panels + 1), 16)
    amp = radial_amplitude(pulse, spec, k) if amplitude is None else np.asarray(amplitude(k), dtype=np.float64)
    return k, w, sigma_closed_form(spec, k), amp


def _localization_smoothed(eta, slab, spec, pulse, plane, j, t_bin, cell, offsets, kq):
    c0 = spec.c0
    H = slab.H
    d0 = 2.0 * j * H if plane == "x_src" else (2.0 * j + 1.0) * H
    t_lo, t_hi = t_bin
    r_lo, r_hi = cell
    k, wk, sig, amp = kq
    base = amp * k * k * wk
    out = np.zeros((3, len(offsets)))
    gx, gw = np.polynomial.legendre.leggauss(48)
    for d in (d0, -d0):
        # panel breaks where the smoothed integrand changes quickly in t
        brk = [t_lo, t_hi]
        for tc in [abs(d) / c0] + [math.sqrt(r * r + d * d) / c0 for r in (r_lo, r_hi) if math.isfinite(r)]:
            rho = math.sqrt(max((c0 * tc) ** 2 - d * d, 0.0))
            wdt = eta * max(rho, eta) / (c0 * c0 * max(tc, 1e-300))
            wdt = max(wdt, eta / c0 if rho == 0.0 else wdt)
            for f in (-12, -4, -1.5, 0, 1.5, 4, 12):
                brk.append(tc + f * wdt)
        brk = [min(max(b, t_lo), t_hi) for b in brk]
        t_nodes, t_w = _panels(brk, 24)
        start = max((abs(d) - 8.0 * eta) / c0, 0.0)
        for t, wt in zip(t_nodes, t_w):
            if t <= start:
                continue
            ct = c0 * t
            s_lo = max(-8.0 * eta, -ct - d)
            s_hi = min(8.0 * eta, ct - d)
            if not s_hi > s_lo:
                continue
            h = 0.5 * (s_hi - s_lo)
            s = 0.5 * (s_hi + s_lo) + h * gx
            ws = h * gw * np.exp(-0.5 * (s / eta) ** 2) / (math.sqrt(TWO_PI) * eta)
            mu = np.clip((d + s) / ct, -1.0, 1.0)
            rho = ct * np.sqrt(np.maximum(0.0, 1.0 - mu * mu))
            P = _annulus_prob(rho, r_lo, r_hi, eta)
            a = ws * P * (TWO_PI / ct) * wt                      # (ns,)
            damp = np.exp(-sig * t) * base                        # (nk,)
            for i, x in enumerate(offsets):
                ph = np.outer(mu, k) * x
                cs = np.cos(ph) @ damp
                sn = np.sin(ph) @ (damp / k)
                out[0, i] += 2.0 * np.dot(a, np.cos(ph) @ (damp / (k * k)))
                out[1, i] += 2.0 * np.dot(a, cs) / (c0 * c0)
                out[2, i] += 2.0 * np.dot(a, sn) / c0
    return out / (t_hi - t_lo)


def _coherent_smoothed(eta, m, t, cell, K, slab, spec, pulse):
    K = np.asarray(K, dtype=np.float64)
    k = float(np.linalg.norm(K))
    u = K / k
    r_lo, r_hi, z_lo, z_hi = cell
    xn = slab.x0n + m * slab.H + spec.c0 * t * u[2]
    rho = spec.c0 * t * math.hypot(u[0], u[1])
    P = float(_annulus_prob(np.array([rho]), r_lo, r_hi, eta)[0])
    Q = special.ndtr((z_hi - xn) / eta) - special.ndtr((z_lo - xn) / eta)
    return np.array([math.exp(-float(sigma_closed_form(spec, k)) * t) * float(radial_amplitude(pulse, spec, k))
                     * P * Q])


FORMULAS = ("localization", "coherent_amplitude")


def smoothed_delta_quadrature(formula_id: str, eta: float, params: dict, levels: int = 4,
                              rtol: float = 1e-5, atol: float = 0.0) -> OracleResult:
    """Evaluate a delta-bearing formula with Gaussian deltas of widths η, η/2, …, then
    Richardson-extrapolate in η².

    ``localization`` params: slab, spec, pulse, plane, j, t_bin, cell, offsets
    and optionally ``amplitude`` (a callable |K| → 𝔸 replacing the pulse's);
    both shells ±d_j are integrated literally. ``coherent_amplitude`` params:
    m, t, cell, K, slab, spec, pulse. ``converged`` is False when the last two
    extrapolants differ by more than rtol·max|value| + atol; the value is still
    returned so the caller can report it.
    """
    if formula_id not in FORMULAS:
        raise ValueError(f"unknown formula id {formula_id!r}; expected one of {FORMULAS}")
    if not eta > 0.0 or levels < 3:
        raise ValueError("eta must be > 0 and levels >= 3")
    etas = [eta / 2**i for i in range(levels)]
    if formula_id == "localization":
        p = dict(params)
        offs = np.atleast_1d(np.asarray(p["offsets"], dtype=np.float64))
        kq = _oracle_k_nodes(p["spec"], p["pulse"], amplitude=p.get("amplitude"))
        f = lambda e: _localization_smoothed(e, p["slab"], p["spec"], p["pulse"], p["plane"], int(p["j"]),
                                             tuple(p["t_bin"]), tuple(p["cell"]), offs, kq)
    else:
        p = params
        f = lambda e: _coherent_smoothed(e, p["m"], p["t"], p["cell"], p["K"], p["slab"], p["spec"], p["pulse"])
    vals = [np.asarray(f(e), dtype=np.float64) for e in etas]
    rich = [(4.0 * b - a) / 3.0 for a, b in zip(vals[:-1], vals[1:])]
    value = rich[-1]
    err = np.abs(rich[-1] - rich[-2])
    d1 = np.max(np.abs(vals[-2] - vals[-3]))
    d2 = np.max(np.abs(vals[-1] - vals[-2]))
    order = math.log2(d1 / d2) if d1 > 0 and d2 > 0 else float("nan")
    conv = bool(np.all(err <= rtol * np.max(np.abs(value)) + atol))
    return OracleResult(value, err, conv, etas, vals, order)


# ---------------------------------------------------------------------------
# quadrature oracles for the remaining derived constants
# ---------------------------------------------------------------------------


def _correlation_function(model, x):
    s2, l = model.strength**2, model.corr_length
    if model.kind is CorrelationKind.GAUSSIAN:
        return s2 * np.exp(-0.5 * (x / l) ** 2)
    return s2 * np.exp(-x / l)


def power_spectrum_by_quadrature(model, p: float, cutoff: float = 60.0, n: int = 200001) -> float:
    """R̂(p) = ∫ r(|x|) e^{−i p·x} dx = 4π ∫ r(x) x² sinc(px) dx, on a truncated radial grid."""
    x = np.linspace(0.0, cutoff * model.corr_length, n)
    f = _correlation_function(model, x) * x * x * np.sinc(p * x / math.pi)
    return 4.0 * math.pi * integrate_simpson(f, x)


def envelope_transform_by_quadrature(width: float, k: float, cutoff: float = 40.0, n: int = 200001) -> float:
    """3-D Fourier transform of exp(−|x|²/(2w²)) at |K| = k by radial quadrature."""
    x = np.linspace(0.0, cutoff * width, n)
    f = np.exp(-0.5 * (x / width) ** 2) * x * x * np.sinc(k * x / math.pi)
    return 4.0 * math.pi * integrate_simpson(f, x)


def integrate_simpson(f, x) -> float:
    from scipy.integrate import simpson
    return float(simpson(f, x=x))


def mean_mu_gaussian(ell_k: float) -> float:
    """E[μ] of the Gaussian-medium kernel, density ∝ exp(ℓ²k² μ) on [−1, 1]: coth(a) − 1/a."""
    a = ell_k * ell_k
    return 1.0 / math.tanh(a) - 1.0 / a


def radial_mean_k(pulse: InitialPulse, spec: MediumSpec) -> float:
    """Mean |K| under 4πk²𝔸(k) by 1-D adaptive quadrature."""
    from scipy.integrate import quad
    from .source import radial_density
    lo, hi = spectral_support(pulse, spec)
    f = lambda k: float(radial_density(pulse, spec, k))
    m0 = quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    m1 = quad(lambda k: k * f(k), lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    return m1 / m0


def derived_constants() -> dict:
    """Each derived constant with the oracle operation that produces it."""
    from .medium import CorrelationModel
    g = CorrelationModel("gaussian", 1.0, 1.0)
    spec = MediumSpec(1.0, g)
    Kq = math.sqrt(2.0)
    rhat = power_spectrum_by_quadrature(g, Kq)
    pulse = InitialPulse("none", "gaussian", 1.0, 0.0, 1.0, 0.0)
    b0 = envelope_transform_by_quadrature(1.0, 0.0)
    sig = float(sigma_closed_form(spec, 1.0))
    return {
        "power_spectrum_gaussian_p0": {"op": "power_spectrum_by_quadrature",
                                       "value": power_spectrum_by_quadrature(g, 0.0)},
        "differential_xsection_right_angle": {"op": "power_spectrum_by_quadrature",
                                              "value": XS_PREFACTOR * rhat},
        "total_xsection_k1": {"op": "sigma_closed_form", "value": sig},
        "mean_mu_ell_k_2": {"op": "mean_mu_gaussian", "value": mean_mu_gaussian(2.0)},
        "amplitude_at_zero": {"op": "envelope_transform_by_quadrature",
                              "value": b0 * b0 / (2.0 * TWO_PI**3)},
        "mean_k_B_gaussian_w1": {"op": "radial_mean_k", "value": radial_mean_k(pulse, spec)},
        "coherent_fraction_t1": {"op": "sigma_closed_form", "value": math.exp(-sig)},
    }
