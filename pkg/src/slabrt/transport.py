"""Monte-Carlo transport in the slab by the method of images.

A particle flies in the unbounded medium; after every flight its normal
coordinate is folded back into [0, H], which is the same as following the
specular reflections. Normal positions are held as int64 ticks
(``TICKS_PER_H`` per H), so folding is exact integer arithmetic and a folded
history coincides bit-for-bit with the mirrored unfolded one.

Wall convention: a flight crosses the walls strictly beyond the cell it
starts in, up to but excluding its end point. The same rule is used by the
unfolded reference run in ``oracle``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._jit import inline_kernel, kernel
from .medium import MediumSpec, ScatterTable, rotate_direction, sample_mu, total_xsection
from .rng import next_uniform, seed_key
from .slab import BoundaryCondition, Particle, SlabConfig
from .source import InitialPulse, SourceSampler, amplitude_A, sample_source
from .tally import (PLANES, TICKS_PER_H, TallyKernelArgs, TallyLayout, TallySet,
                    deposit_subsegment, find_bin)

__all__ = ["BoundaryCondition", "SlabConfig", "Particle", "fold_into_slab", "step_to_next_event",
           "run_simulation", "coherent_amplitude", "NonFiniteTallyError", "Problem"]


class NonFiniteTallyError(FloatingPointError):
    def __init__(self, particle_index: int):
        super().__init__(f"nonfinite tally contribution from particle {particle_index}")
        self.particle_index = particle_index


def fold_into_slab(x_n: float, k_n: float, H: float) -> tuple[float, float, int]:
    """Map an unfolded normal coordinate reached from inside [0, H] back into the slab.

    Returns the folded coordinate, the folded normal wavenumber and the
    number of walls crossed; the wavenumber changes sign once per crossing.
    """
    if not H > 0.0:
        raise ValueError("H must be > 0")
    if 0.0 <= x_n <= H:
        c = 0
    elif x_n > H:
        c = math.ceil(x_n / H) - 1
    else:
        c = -math.ceil(-x_n / H)
    if c % 2 == 0:
        return x_n - c * H, k_n, abs(c)
    return (c + 1) * H - x_n, -k_n, abs(c)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@inline_kernel
def fold_in_cell(y, c, Ht):
    """Folded tick coordinate of unfolded tick ``y`` lying in image cell ``c``."""
    if c % 2 == 0:
        return y - c * Ht
    return (c + 1) * Ht - y


@inline_kernel
def account_unscattered(t, dt, w, t_edges, census, coh_time, census_coh):
    """Coherent-channel bookkeeping for an unscattered flight [t, t + dt)."""
    te = t + dt
    i = find_bin(t_edges, t)
    if i >= 0:
        while i < t_edges.size - 1 and t_edges[i] < te:
            a = max(t, t_edges[i])
            b = min(te, t_edges[i + 1])
            if b > a:
                coh_time[i] += w * (b - a)
            i += 1
    for c in range(census.size):
        if census[c] >= t and census[c] < te:
            census_coh[c] += 1


@inline_kernel
def fly_folded(t, dt, z, px, py, ux, uy, uz, c0, scale, Ht, kb, pkb, w, inv_k2,
               t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo, slice_hi,
               main_sum, main_ik2, main_cnt, plane_sum, plane_cnt, mu_batch, buf):
    """Fly for ``dt`` from tick ``z`` with direction û, depositing along the way.

    Returns (folded end tick, image cell of the end point, ok flag).
    """
    d = np.int64(np.rint(((c0 * dt) * uz) * scale))
    y_end = z + d
    wx = c0 * ux
    wy = c0 * uy
    ok = True
    c = np.int64(0)
    ya = z
    sa = 0.0
    if d > 0:
        m = np.int64(1)
        while m * Ht < y_end:
            wall = m * Ht
            sw = dt * (float(wall - z) / float(d))
            mu_f = uz if c % 2 == 0 else -uz
            ok &= deposit_subsegment(t, sa, sw, fold_in_cell(ya, c, Ht), fold_in_cell(wall, c, Ht),
                                     px, py, wx, wy, mu_f, kb, pkb, w, t_edges, r_edges, z_ticks,
                                     mu_edges, n_pmu, slice_lo, slice_hi, main_sum, main_ik2,
                                     main_cnt, inv_k2, plane_sum, plane_cnt, mu_batch, buf)
            c = m
            ya = wall
            sa = sw
            m += 1
    elif d < 0:
        m = np.int64(0)
        while m * Ht > y_end:
            wall = m * Ht
            sw = dt * (float(wall - z) / float(d))
            mu_f = uz if c % 2 == 0 else -uz
            ok &= deposit_subsegment(t, sa, sw, fold_in_cell(ya, c, Ht), fold_in_cell(wall, c, Ht),
                                     px, py, wx, wy, mu_f, kb, pkb, w, t_edges, r_edges, z_ticks,
                                     mu_edges, n_pmu, slice_lo, slice_hi, main_sum, main_ik2,
                                     main_cnt, inv_k2, plane_sum, plane_cnt, mu_batch, buf)
            c = m - 1
            ya = wall
            sa = sw
            m -= 1
    mu_f = uz if c % 2 == 0 else -uz
    ok &= deposit_subsegment(t, sa, dt, fold_in_cell(ya, c, Ht), fold_in_cell(y_end, c, Ht),
                             px, py, wx, wy, mu_f, kb, pkb, w, t_edges, r_edges, z_ticks,
                             mu_edges, n_pmu, slice_lo, slice_hi, main_sum, main_ik2,
                             main_cnt, inv_k2, plane_sum, plane_cnt, mu_batch, buf)
    return fold_in_cell(y_end, c, Ht), c, ok


@kernel
def transport_chunk(first, count, key0, key1,
                    src_cdf, node_k, node_sigma, node_kbin, node_pkbin, weight,
                    tab_F, tab_mu, tab_slope, tab_len,
                    c0, scale, Ht, z0, T,
                    t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo, slice_hi, census,
                    main_sum, main_ik2, main_cnt, plane_sum, plane_cnt, mu_batch,
                    coh_time, census_coh, buf, st, cache):
    """Simulate particles ``first .. first+count-1`` to time T. Returns −1, or the index of a
    particle that produced a nonfinite contribution. ``st``/``cache`` are RNG scratch."""
    for ip in range(first, first + count):
        st[0] = 0
        u1 = next_uniform(key0, key1, ip, st, cache)
        u2 = next_uniform(key0, key1, ip, st, cache)
        u3 = next_uniform(key0, key1, ip, st, cache)
        node, ux, uy, uz = sample_source(src_cdf, u1, u2, u3)
        k = node_k[node]
        sig = node_sigma[node]
        kb = node_kbin[node]
        pkb = node_pkbin[node]
        inv_k2 = 1.0 / (k * k)
        px = 0.0
        py = 0.0
        z = z0
        t = 0.0
        nsc = 0
        parity = 0
        while True:
            if sig > 0.0:
                tau = -math.log(next_uniform(key0, key1, ip, st, cache)) / sig
            else:
                tau = math.inf
            last = t + tau >= T
            dt = T - t if last else tau
            if nsc == 0:
                account_unscattered(t, dt, weight, t_edges, census, coh_time, census_coh)
            z, c, ok = fly_folded(t, dt, z, px, py, ux, uy, uz, c0, scale, Ht, kb, pkb, weight,
                                  inv_k2, t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo,
                                  slice_hi, main_sum, main_ik2, main_cnt, plane_sum, plane_cnt,
                                  mu_batch, buf)
            if not ok:
                return ip
            if c % 2 != 0:
                uz = -uz
            parity ^= abs(c) & 1
            px += (c0 * ux) * dt
            py += (c0 * uy) * dt
            if last:
                break
            t += dt
            mu = sample_mu(tab_F, tab_mu, tab_slope, tab_len, node,
                           next_uniform(key0, key1, ip, st, cache))
            uphi = next_uniform(key0, key1, ip, st, cache)
            ux, uy, uz = rotate_direction(ux, uy, uz, mu, uphi, parity)
            nsc += 1
    return -1


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


@dataclass
class Problem:
    """Immutable precomputed inputs of a run: source nodes, Σ, μ tables, tally geometry."""

    medium: MediumSpec
    pulse: InitialPulse
    slab: SlabConfig
    layout: TallyLayout
    sampler: SourceSampler
    table: ScatterTable
    targs: TallyKernelArgs

    @classmethod
    def build(cls, medium, pulse, slab, layout, source_nodes: int = 128, table_nodes: int = 4096):
        sampler = SourceSampler(pulse, medium, source_nodes)
        table = ScatterTable(medium, sampler.k, table_nodes)
        targs = TallyKernelArgs(layout, slab.H, slab.x0n, sampler.k)
        return cls(medium, pulse, slab, layout, sampler, table, targs)

    @property
    def z0_ticks(self) -> int:
        return int(np.rint(self.slab.x0n * self.targs.scale))

    def node_k_edges_covered(self) -> bool:
        return bool(np.all(self.targs.node_kbin[self.sampler.prob > 0] >= 0))


def chunk_bounds(n_particles: int, chunk_size: int) -> list[tuple[int, int]]:
    return [(a, min(chunk_size, n_particles - a)) for a in range(0, n_particles, chunk_size)]


def _new_chunk_arrays(layout: TallyLayout):
    return (np.zeros(layout.main_shape), np.zeros(layout.main_shape),
            np.zeros(layout.main_shape, dtype=np.int64),
            np.zeros(layout.plane_shape), np.zeros(layout.plane_shape, dtype=np.int64),
            np.zeros((len(PLANES), layout.plane_mu_bins)),
            np.zeros(layout.time_edges.size - 1),
            np.zeros(len(layout.census_times), dtype=np.int64))


def _run_chunk(prob: Problem, key, first, count, weight, T, chunk_kernel=None):
    arrs = _new_chunk_arrays(prob.layout)
    a = prob.targs
    tb = prob.table
    fn = chunk_kernel or transport_chunk
    bad = fn(first, count, key[0], key[1],
             prob.sampler.cdf, prob.sampler.k, tb.sigma, a.node_kbin, a.node_pkbin, weight,
             tb.F, tb.mu, tb.slope, tb.length,
             prob.medium.c0, a.scale, np.int64(TICKS_PER_H), np.int64(prob.z0_ticks), T,
             a.t_edges, a.r_edges, a.z_ticks, a.mu_edges, a.n_pmu, a.slice_lo, a.slice_hi, a.census,
             *arrs, np.empty(a.n_scratch), np.zeros(1, dtype=np.int64), np.zeros(1))
    if bad >= 0:
        raise NonFiniteTallyError(int(bad))
    return arrs


def simulate(prob: Problem, n_particles: int, T: float, seed: int, chunk_size: int = 10000,
             workers: int = 1, chunk_kernel=None) -> TallySet:
    """Run ``n_particles`` histories and merge chunk tallies in chunk order.

    The chunk partition depends only on ``chunk_size``, so the result is
    bit-identical for any ``workers``.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if not T > 0.0:
        raise ValueError("final time T must be > 0")
    key = seed_key(seed)
    weight = prob.sampler.Z / n_particles
    bounds = chunk_bounds(n_particles, chunk_size)
    meta = {"n_particles": int(n_particles), "seed": int(seed), "final_time": float(T),
            "Z": float(prob.sampler.Z), "weight": float(weight), "chunk_size": int(chunk_size),
            "n_chunks": len(bounds), "c0": float(prob.medium.c0), "H": float(prob.slab.H),
            "x0": list(prob.slab.x0), "bc": prob.slab.bc.value}
    out = TallySet.empty(prob.layout, len(bounds), meta)
    totals = (out.main_sum, out.main_sum_inv_k2, out.main_cnt, out.plane_sum, out.plane_cnt)

    def merge(ci, arrs):
        for tot, part in zip(totals, arrs[:5]):
            tot += part
        out.plane_mu_batches[ci] = arrs[5]
        out.coherent_time[...] += arrs[6]
        out.census_coherent[...] += arrs[7]

    workers = max(1, int(workers))
    if workers == 1:
        for ci, (first, count) in enumerate(bounds):
            merge(ci, _run_chunk(prob, key, first, count, weight, T, chunk_kernel))
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for w0 in range(0, len(bounds), workers):
            wave = bounds[w0:w0 + workers]
            futs = [pool.submit(_run_chunk, prob, key, f, c, weight, T, chunk_kernel) for f, c in wave]
            for i, fut in enumerate(futs):
                merge(w0 + i, fut.result())
    return out


def run_simulation(run) -> TallySet:
    """Simulate a validated ``RunConfig``."""
    prob = run.problem()
    return simulate(prob, run.n_particles, run.final_time, run.seed, run.chunk_size, run.workers)


# ---------------------------------------------------------------------------
# single-particle API
# ---------------------------------------------------------------------------


def step_to_next_event(p: Particle, spec: MediumSpec, slab: SlabConfig, rng,
                       final_time: float = math.inf, tallies: TallySet | None = None) -> Particle:
    """Advance one particle through one free flight and (unless cut at ``final_time``) one scattering.

    ``rng`` supplies uniforms (one for the flight, two for the scattering),
    in the same order as the batch kernel. Positions are folded into the slab
    after the flight. If ``tallies`` is given the flight is deposited there.
    """
    k = p.k
    if not k > 0.0:
        raise ValueError("a particle with |K| = 0 has no direction and cannot be transported")
    sig = total_xsection(spec, k)
    u = np.asarray(p.K, dtype=np.float64) / k
    tau = -math.log(rng.random()) / sig if sig > 0.0 else math.inf
    last = p.time + tau >= final_time
    dt = final_time - p.time if last else tau
    if not math.isfinite(dt):
        raise ValueError("ballistic particle needs a finite final_time")
    x0 = slab.x0
    layout = tallies.layout if tallies is not None else TallyLayout(
        [0.0, max(p.time + dt, 1.0) * 2.0], [0.0, 1e300], [0.0, slab.H], [-1.0, 1.0],
        [0.0, 2.0 * k + 1.0], [0.0, 2.0 * k + 1.0])
    sink = tallies if tallies is not None else TallySet.empty(layout)
    a = TallyKernelArgs(layout, slab.H, slab.x0n, np.array([k]))
    mu_batch = np.zeros((len(PLANES), layout.plane_mu_bins))
    z = np.int64(np.rint(p.position[2] * a.scale))
    zf, c, ok = fly_folded(float(p.time), float(dt), z, float(p.position[0] - x0[0]),
                           float(p.position[1] - x0[1]), float(u[0]), float(u[1]), float(u[2]),
                           spec.c0, a.scale, np.int64(TICKS_PER_H), int(a.node_kbin[0]),
                           int(a.node_pkbin[0]), float(p.weight), 1.0 / (k * k),
                           a.t_edges, a.r_edges, a.z_ticks, a.mu_edges, a.n_pmu, a.slice_lo,
                           a.slice_hi, sink.main_sum, sink.main_sum_inv_k2, sink.main_cnt,
                           sink.plane_sum, sink.plane_cnt, mu_batch, np.empty(a.n_scratch))
    if not ok:
        raise NonFiniteTallyError(-1)
    ux, uy, uz = float(u[0]), float(u[1]), float(u[2])
    if c % 2:
        uz = -uz
    n_refl = p.n_reflections + abs(int(c))
    pos = np.array([p.position[0] + (spec.c0 * u[0]) * dt, p.position[1] + (spec.c0 * u[1]) * dt,
                    float(zf) / a.scale])
    n_sc = p.n_scatters
    if not last:
        F, mu_n, sl = _table_row(spec, k)
        mu = sample_mu(F, mu_n, sl, np.array([F.shape[1]], dtype=np.int64), 0, rng.random())
        ux, uy, uz = rotate_direction(ux, uy, uz, mu, rng.random(), n_refl)
        n_sc += 1
    return Particle(position=pos, K=k * np.array([ux, uy, uz]), weight=p.weight,
                    time=p.time + dt, n_scatters=n_sc, n_reflections=n_refl)


_ROW_CACHE: dict = {}


def _table_row(spec: MediumSpec, k: float):
    key = (spec, k)
    if key not in _ROW_CACHE:
        tb = ScatterTable(spec, np.array([k]))
        L = int(tb.length[0])
        _ROW_CACHE[key] = (tb.F[:, :L].copy(), tb.mu[:, :L].copy(), tb.slope[:, :L].copy())
    return _ROW_CACHE[key]


# ---------------------------------------------------------------------------
# coherent (unscattered) term
# ---------------------------------------------------------------------------


def coherent_amplitude(m: int, t: float, cell, K, slab: SlabConfig, spec: MediumSpec,
                       pulse: InitialPulse) -> float:
    """Cell-integrated coherent density of image offset mH at time t and wavevector K.

    The coherent term is e^{−Σ(K)t} 𝔸(K) δ(x − x0 − mH ê_n − c0 t K̂); integrated
    over ``cell`` = (r_lo, r_hi, z_lo, z_hi) (radius about x0⊥, unfolded x_n in
    half-open intervals) it is e^{−Σt} 𝔸(K) times the indicator of the point.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    K = np.asarray(K, dtype=np.float64)
    k = float(np.sqrt(np.dot(K, K)))
    r_lo, r_hi, z_lo, z_hi = cell
    if k > 0.0:
        u = K / k
    else:
        u = np.zeros(3)
    xn = slab.x0n + m * slab.H + spec.c0 * t * u[2]
    rho = spec.c0 * t * math.hypot(u[0], u[1])
    inside = (r_lo <= rho < r_hi) and (z_lo <= xn < z_hi)
    if not inside:
        return 0.0
    return math.exp(-total_xsection(spec, k) * t) * float(amplitude_A(pulse, spec, K))
