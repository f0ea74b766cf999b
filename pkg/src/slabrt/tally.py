"""Track-length tallies of the phase-space energy density a(t, x, K).

Main grid: time × transverse radius |x⊥ − x0⊥| × x_n × μ × |K|, where
μ = k_n/|K|. Plane tallies: thin slices at x_n ∈ {0, H, x0n, H − x0n} with
fine μ resolution, used by the interference post-processing.

Normal positions are integer ticks (``TICKS_PER_H`` per slab thickness) so
that folding is exact; see ``transport``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import inline_kernel, kernel

TICKS_PER_H = 2**40
PLANES = ("x0", "xH", "x_src", "x_mirror")


@dataclass(frozen=True)
class TallyLayout:
    """Bin edges of all tallies. Lengths are in the units of the run."""

    time_edges: np.ndarray
    r_edges: np.ndarray
    z_edges: np.ndarray
    mu_edges: np.ndarray
    k_edges: np.ndarray
    plane_k_edges: np.ndarray
    plane_mu_bins: int = 64
    plane_thickness: float = 1e-3
    census_times: tuple = ()

    def __post_init__(self):
        for name in ("time_edges", "r_edges", "z_edges", "mu_edges", "k_edges", "plane_k_edges"):
            a = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            if a.ndim != 1 or a.size < 2 or not np.all(np.isfinite(a)) or not np.all(np.diff(a) > 0):
                raise ValueError(f"{name} must be a finite, strictly increasing grid with >= 2 edges")
            object.__setattr__(self, name, a)
        if int(self.plane_mu_bins) < 1 or not self.plane_thickness > 0.0:
            raise ValueError("plane_mu_bins must be >= 1 and plane_thickness > 0")
        object.__setattr__(self, "census_times", tuple(float(t) for t in self.census_times))

    @property
    def main_shape(self) -> tuple[int, ...]:
        return (self.time_edges.size - 1, self.r_edges.size - 1, self.z_edges.size - 1,
                self.mu_edges.size - 1, self.k_edges.size - 1)

    @property
    def plane_shape(self) -> tuple[int, ...]:
        return (len(PLANES), self.time_edges.size - 1, self.r_edges.size - 1,
                self.plane_mu_bins, self.plane_k_edges.size - 1)

    def plane_mu_edges(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.plane_mu_bins + 1)


@dataclass(frozen=True)
class EnergyMatrix:
    """Entries of the 2×2 energy matrix; e_pv is the (p, v) entry and −e_pv the (v, p) entry."""

    e_pp: float
    e_vv: float
    e_pv: float = 0.0

    def scaled(self, c: float) -> "EnergyMatrix":
        return EnergyMatrix(self.e_pp * c, self.e_vv * c, self.e_pv * c)

    def __add__(self, other: "EnergyMatrix") -> "EnergyMatrix":
        return EnergyMatrix(self.e_pp + other.e_pp, self.e_vv + other.e_vv, self.e_pv + other.e_pv)


@dataclass
class TallyGrid:
    """Main grid: edges plus weighted sums, 1/|K|²-weighted sums, and deposit counts."""

    time_edges: np.ndarray
    r_edges: np.ndarray
    z_edges: np.ndarray
    mu_edges: np.ndarray
    k_edges: np.ndarray
    sums: np.ndarray
    sums_inv_k2: np.ndarray
    counts: np.ndarray

    def cell_volume(self, r_bin: int, z_bin: int) -> float:
        r0, r1 = self.r_edges[r_bin], self.r_edges[r_bin + 1]
        return math.pi * (r1 * r1 - r0 * r0) * (self.z_edges[z_bin + 1] - self.z_edges[z_bin])


@dataclass
class TallySet:
    """Everything accumulated by one run."""

    layout: TallyLayout
    main_sum: np.ndarray
    main_sum_inv_k2: np.ndarray
    main_cnt: np.ndarray
    plane_sum: np.ndarray
    plane_cnt: np.ndarray
    plane_mu_batches: np.ndarray  # (n_chunks, n_planes, plane_mu_bins)
    coherent_time: np.ndarray     # unscattered track length per time bin (× weight)
    census_coherent: np.ndarray   # unscattered particle count at each census time
    meta: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, layout: TallyLayout, n_chunks: int = 0, meta: dict | None = None) -> "TallySet":
        return cls(layout,
                   np.zeros(layout.main_shape), np.zeros(layout.main_shape),
                   np.zeros(layout.main_shape, dtype=np.int64),
                   np.zeros(layout.plane_shape), np.zeros(layout.plane_shape, dtype=np.int64),
                   np.zeros((n_chunks, len(PLANES), layout.plane_mu_bins)),
                   np.zeros(layout.time_edges.size - 1),
                   np.zeros(len(layout.census_times), dtype=np.int64),
                   dict(meta or {}))

    @property
    def grid(self) -> TallyGrid:
        L = self.layout
        return TallyGrid(L.time_edges, L.r_edges, L.z_edges, L.mu_edges, L.k_edges,
                         self.main_sum, self.main_sum_inv_k2, self.main_cnt)

    def energy_per_time_bin(self) -> np.ndarray:
        """Σ over all space/direction bins of a, per time bin (equals Z when nothing leaks)."""
        return self.main_sum.sum(axis=(1, 2, 3, 4)) / np.diff(self.layout.time_edges)

    def arrays(self) -> dict[str, np.ndarray]:
        return {"main_sum": self.main_sum, "main_sum_inv_k2": self.main_sum_inv_k2,
                "main_cnt": self.main_cnt, "plane_sum": self.plane_sum, "plane_cnt": self.plane_cnt,
                "plane_mu_batches": self.plane_mu_batches, "coherent_time": self.coherent_time,
                "census_coherent": self.census_coherent}


class TallyKernelArgs:
    """Flat arrays handed to the deposit kernel, derived once from a layout and slab."""

    def __init__(self, layout: TallyLayout, H: float, x0n: float, k_nodes: np.ndarray):
        scale = TICKS_PER_H / H
        self.scale = scale
        self.t_edges = layout.time_edges
        self.r_edges = layout.r_edges
        self.z_ticks = np.rint(layout.z_edges * scale).astype(np.int64)
        self.mu_edges = layout.mu_edges
        self.n_pmu = int(layout.plane_mu_bins)
        half = 0.5 * layout.plane_thickness
        lo = np.array([0.0, H - layout.plane_thickness, x0n - half, H - x0n - half])
        hi = np.array([layout.plane_thickness, H, x0n + half, H - x0n + half])
        self.slice_lo = np.rint(lo * scale).astype(np.int64)
        self.slice_hi = np.rint(hi * scale).astype(np.int64)
        self.node_kbin = bin_index_array(layout.k_edges, k_nodes)
        self.node_pkbin = bin_index_array(layout.plane_k_edges, k_nodes)
        self.census = np.asarray(layout.census_times, dtype=np.float64)
        nb = (self.t_edges.size + self.z_ticks.size + 2 * self.r_edges.size + 8 + 2)
        self.n_scratch = nb


def bin_index_array(edges, x) -> np.ndarray:
    """Bin index of each x (−1 if outside [edges[0], edges[-1]])."""
    x = np.asarray(x, dtype=np.float64)
    idx = np.searchsorted(edges, x, side="right") - 1
    idx = np.where(x == edges[-1], edges.size - 2, idx)
    idx = np.where((x < edges[0]) | (x > edges[-1]), -1, idx)
    return idx.astype(np.int64)


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@inline_kernel
def find_bin(edges, x):
    """Index i with edges[i] <= x < edges[i+1]; −1 outside. The top edge closes the last bin."""
    n = edges.size - 1
    if x < edges[0] or x > edges[n]:
        return -1
    if x == edges[n]:
        return n - 1
    lo = 0
    hi = n
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if edges[mid] <= x:
            lo = mid
        else:
            hi = mid
    return lo


@inline_kernel
def _insert_sorted(buf, n, v):
    i = n
    while i > 0 and buf[i - 1] > v:
        buf[i] = buf[i - 1]
        i -= 1
    buf[i] = v
    return n + 1


@inline_kernel
def deposit_subsegment(t0, s_a, s_b, za, zb, px, py, wx, wy, mu_f, kbin, pkbin, w,
                       t_edges, r_edges, z_ticks, mu_edges, n_pmu, slice_lo, slice_hi,
                       main_sum, main_ik2, main_cnt, inv_k2, plane_sum, plane_cnt, mu_batch, buf):
    """Add w × (time in bin) for the straight sub-segment s ∈ [s_a, s_b] of one flight.

    The sub-segment stays inside the slab: x_n runs linearly from tick ``za``
    to tick ``zb`` while x⊥ − x0⊥ = (px, py) + (wx, wy)·s. Returns False if a
    nonfinite contribution was produced.
    """
    if not (s_b > s_a):
        return True
    # fast path: no edge of any kind inside the sub-segment
    dur = s_b - s_a
    ta = t0 + s_a
    tb = t0 + s_b
    it = find_bin(t_edges, ta)
    zlo = min(za, zb)
    zhi = max(za, zb)
    crossing = it < 0 or t_edges[it + 1] < tb
    if not crossing and zhi > zlo:
        for j in range(slice_lo.size):
            if (slice_lo[j] > zlo and slice_lo[j] < zhi) or (slice_hi[j] > zlo and slice_hi[j] < zhi):
                crossing = True
                break
    iz = -1
    if not crossing and zlo >= z_ticks[0] and zhi <= z_ticks[z_ticks.size - 1]:
        lo = 0
        hi = z_ticks.size - 1
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if z_ticks[mid] <= zlo:
                lo = mid
            else:
                hi = mid
        iz = lo
        if z_ticks[iz + 1] < zhi:
            crossing = True
    ir = -1
    if not crossing:
        xa = px + wx * s_a
        ya = py + wy * s_a
        xb = px + wx * s_b
        yb = py + wy * s_b
        ra2 = xa * xa + ya * ya
        rb2 = xb * xb + yb * yb
        rmax2 = max(ra2, rb2)
        rmin2 = min(ra2, rb2)
        A = wx * wx + wy * wy
        if A > 0.0:
            sc = -(px * wx + py * wy) / A
            if sc > s_a and sc < s_b:
                xc = px + wx * sc
                yc = py + wy * sc
                rmin2 = min(rmin2, xc * xc + yc * yc)
        for j in range(r_edges.size):
            e2 = r_edges[j] * r_edges[j]
            if e2 > rmin2 and e2 < rmax2:
                crossing = True
                break
        if not crossing:
            sm = 0.5 * (s_a + s_b)
            x = px + wx * sm
            y = py + wy * sm
            ir = find_bin(r_edges, math.sqrt(x * x + y * y))
    if not crossing:
        if ir < 0:
            return True
        val = w * dur
        if not math.isfinite(val):
            return False
        mb = find_bin(mu_edges, mu_f)
        pmb = int((mu_f + 1.0) * 0.5 * n_pmu)
        if pmb >= n_pmu:
            pmb = n_pmu - 1
        elif pmb < 0:
            pmb = 0
        if iz >= 0 and mb >= 0 and kbin >= 0:
            main_sum[it, ir, iz, mb, kbin] += val
            main_ik2[it, ir, iz, mb, kbin] += val * inv_k2
            main_cnt[it, ir, iz, mb, kbin] += 1
        if pkbin >= 0:
            zm = za + (zb - za) * 0.5
            for p in range(slice_lo.size):
                if zm >= slice_lo[p] and zm <= slice_hi[p]:
                    plane_sum[p, it, ir, pmb, pkbin] += val
                    plane_cnt[p, it, ir, pmb, pkbin] += 1
                    mu_batch[p, pmb] += val
        return True
    # general path: split at every edge inside the sub-segment
    nb = 0
    buf[0] = s_a
    buf[1] = s_b
    nb = 2
    # time edges
    i = find_bin(t_edges, ta)
    if i >= 0:
        i += 1
        while i < t_edges.size and t_edges[i] < tb:
            s = t_edges[i] - t0
            if s > s_a and s < s_b:
                nb = _insert_sorted(buf, nb, s)
            i += 1
    # x_n edges: main grid and plane slices
    if za != zb:
        dz = float(zb - za)
        for j in range(z_ticks.size):
            e = z_ticks[j]
            if e > zlo and e < zhi:
                s = s_a + (float(e - za) / dz) * dur
                if s > s_a and s < s_b:
                    nb = _insert_sorted(buf, nb, s)
        for j in range(slice_lo.size):
            for e in (slice_lo[j], slice_hi[j]):
                if e > zlo and e < zhi:
                    s = s_a + (float(e - za) / dz) * dur
                    if s > s_a and s < s_b:
                        nb = _insert_sorted(buf, nb, s)
    # radial edges: |p + w s| = r
    A = wx * wx + wy * wy
    if A > 0.0:
        B = px * wx + py * wy
        P = px * px + py * py
        for j in range(r_edges.size):
            r = r_edges[j]
            C = P - r * r
            disc = B * B - A * C
            if disc > 0.0:
                sq = math.sqrt(disc)
                # stable pair of roots of A s² + 2B s + C = 0
                q = -(B + sq) if B >= 0.0 else -(B - sq)
                r1 = q / A
                r2 = C / q if q != 0.0 else r1
                if r1 > s_a and r1 < s_b:
                    nb = _insert_sorted(buf, nb, r1)
                if r2 > s_a and r2 < s_b and r2 != r1:
                    nb = _insert_sorted(buf, nb, r2)
    # μ bins are constant along the sub-segment
    mb = find_bin(mu_edges, mu_f)
    pmb = int((mu_f + 1.0) * 0.5 * n_pmu)
    if pmb >= n_pmu:
        pmb = n_pmu - 1
    elif pmb < 0:
        pmb = 0
    for q_ in range(nb - 1):
        a = buf[q_]
        b = buf[q_ + 1]
        if not (b > a):
            continue
        sm = 0.5 * (a + b)
        it = find_bin(t_edges, t0 + sm)
        if it < 0:
            continue
        x = px + wx * sm
        y = py + wy * sm
        ir = find_bin(r_edges, math.sqrt(x * x + y * y))
        if ir < 0:
            continue
        zm = za + (zb - za) * ((sm - s_a) / dur)
        # z bin on the tick grid
        iz = -1
        if zm >= z_ticks[0] and zm <= z_ticks[z_ticks.size - 1]:
            lo = 0
            hi = z_ticks.size - 1
            while hi - lo > 1:
                mid = (lo + hi) >> 1
                if z_ticks[mid] <= zm:
                    lo = mid
                else:
                    hi = mid
            iz = lo
        val = w * (b - a)
        if not math.isfinite(val):
            return False
        if iz >= 0 and mb >= 0 and kbin >= 0:
            main_sum[it, ir, iz, mb, kbin] += val
            main_ik2[it, ir, iz, mb, kbin] += val * inv_k2
            main_cnt[it, ir, iz, mb, kbin] += 1
        if pkbin >= 0:
            for p in range(slice_lo.size):
                if zm >= slice_lo[p] and zm <= slice_hi[p]:
                    plane_sum[p, it, ir, pmb, pkbin] += val
                    plane_cnt[p, it, ir, pmb, pkbin] += 1
                    mu_batch[p, pmb] += val
    return True


# ---------------------------------------------------------------------------
# python-level operations
# ---------------------------------------------------------------------------


def energy_density(grid: TallyGrid, spec, t_bin: int, x_bin: tuple[int, int]) -> tuple[EnergyMatrix, int]:
    """∫a 𝔻(K) dK in the cell (t_bin, r_bin, z_bin), plus the number of deposits behind it.

    An empty cell returns the zero matrix with count 0 so callers can tell it
    apart from a populated cell that happens to sum to zero.
    """
    r_bin, z_bin = x_bin
    dt = grid.time_edges[t_bin + 1] - grid.time_edges[t_bin]
    norm = 1.0 / (dt * grid.cell_volume(r_bin, z_bin))
    cnt = int(grid.counts[t_bin, r_bin, z_bin].sum())
    if cnt == 0:
        return EnergyMatrix(0.0, 0.0, 0.0), 0
    s = float(grid.sums[t_bin, r_bin, z_bin].sum()) * norm
    sk = float(grid.sums_inv_k2[t_bin, r_bin, z_bin].sum()) * norm
    return EnergyMatrix(sk, s / spec.c0**2, 0.0), cnt


def deposit_track(tallies: TallySet, particle, duration: float, H: float, x0, c0: float,
                  node_kbin: int | None = None, node_pkbin: int | None = None) -> TallySet:
    """Deposit one straight flight of ``duration`` starting from ``particle``.

    The flight must not leave the slab. ``x0`` is the source point; the
    particle position is absolute.
    """
    L = tallies.layout
    args = TallyKernelArgs(L, H, x0[2], np.array([particle.k]))
    kb = args.node_kbin[0] if node_kbin is None else node_kbin
    pkb = args.node_pkbin[0] if node_pkbin is None else node_pkbin
    k = particle.k
    u = np.asarray(particle.K, dtype=np.float64) / k
    z0 = particle.position[2]
    z1 = z0 + c0 * u[2] * duration
    if z0 < 0.0 or z0 > H or z1 < 0.0 or z1 > H:
        raise ValueError("segment must lie within one fold cell")
    za = int(np.rint(z0 * args.scale))
    zb = int(np.rint(z1 * args.scale))
    buf = np.empty(args.n_scratch)
    mu_batch = np.zeros((len(PLANES), L.plane_mu_bins))
    ok = deposit_subsegment(float(particle.time), 0.0, float(duration), za, zb,
                            float(particle.position[0] - x0[0]), float(particle.position[1] - x0[1]),
                            c0 * u[0], c0 * u[1], float(u[2]), int(kb), int(pkb), float(particle.weight),
                            args.t_edges, args.r_edges, args.z_ticks, args.mu_edges, args.n_pmu,
                            args.slice_lo, args.slice_hi, tallies.main_sum, tallies.main_sum_inv_k2,
                            tallies.main_cnt, 1.0 / (k * k), tallies.plane_sum, tallies.plane_cnt,
                            mu_batch, buf)
    if not ok:
        raise FloatingPointError("nonfinite tally contribution")
    return tallies
