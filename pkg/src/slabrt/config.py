"""Run configuration: JSON schema, validation with paths, canonical echo and hash.

Every problem found is collected with its JSON path; nothing stops at the
first error. Unknown keys are errors. Defaults are filled in at parse time
so the echoed document is complete and parses back to an equal config.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .interference import default_offsets
from .medium import CorrelationModel, MediumSpec
from .slab import BoundaryCondition, SlabConfig
from .source import InitialPulse, SourceSampler, spectral_support
from .tally import PLANES, TallyLayout

PROFILE_PLANES = PLANES

_BC_ALIASES = {
    "neumannneumann": BoundaryCondition.NEUMANN_NEUMANN,
    "dirichletdirichlet": BoundaryCondition.DIRICHLET_DIRICHLET,
    "dirichletneumann": BoundaryCondition.DIRICHLET_NEUMANN,
    "neumanndirichlet": BoundaryCondition.NEUMANN_DIRICHLET,
}


class ConfigError(ValueError):
    """All validation problems of one document, as (path, message) pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {m}" for p, m in self.errors))

    def report(self) -> dict:
        return {"error": "validation", "problems": [{"path": p, "message": m} for p, m in self.errors]}


def parse_bc(value: str) -> BoundaryCondition:
    """Accepts "neumann-dirichlet" style strings and CamelCase names."""
    try:
        return BoundaryCondition(value)
    except ValueError:
        key = str(value).replace("-", "").replace("_", "").lower()
        if key in _BC_ALIASES:
            return _BC_ALIASES[key]
        raise ValueError(f"unknown boundary condition {value!r}; expected one of "
                         f"{[b.value for b in BoundaryCondition]}") from None


@dataclass(frozen=True)
class ProfileRequest:
    planes: tuple[str, ...]
    offsets: tuple[float, ...]
    time_bins: tuple[int, ...]
    cell: tuple[float, float]


@dataclass(frozen=True)
class Numerics:
    source_k_nodes: int = 128
    mu_table_nodes: int = 4096


@dataclass
class RunConfig:
    medium: MediumSpec
    pulse: InitialPulse
    slab: SlabConfig
    n_particles: int
    final_time: float
    seed: int
    layout: TallyLayout
    profiles: ProfileRequest
    chunk_size: int = 10000
    workers: int = 1
    numerics: Numerics = field(default_factory=Numerics)
    _problem: Any = field(default=None, repr=False, compare=False)

    def problem(self):
        from .transport import Problem
        if self._problem is None:
            self._problem = Problem.build(self.medium, self.pulse, self.slab, self.layout,
                                          self.numerics.source_k_nodes, self.numerics.mu_table_nodes)
        return self._problem

    def to_dict(self, include_workers: bool = True) -> dict:
        c = self.medium.correlation
        L = self.layout
        run = {"n_particles": self.n_particles, "final_time": self.final_time, "seed": self.seed,
               "chunk_size": self.chunk_size}
        if include_workers:
            run["workers"] = self.workers
        return {
            "medium": {"c0": self.medium.c0, "correlation": {"kind": c.kind.value, "strength": c.strength,
                                                             "corr_length": c.corr_length}},
            "pulse": {"kind_A": self.pulse.kind_A.value, "kind_B": self.pulse.kind_B.value,
                      "width": self.pulse.width, "amp_A": self.pulse.amp_A, "amp_B": self.pulse.amp_B,
                      "carrier": self.pulse.carrier},
            "slab": {"H": self.slab.H, "bc": self.slab.bc.value, "x0": list(self.slab.x0)},
            "run": run,
            "numerics": {"source_k_nodes": self.numerics.source_k_nodes,
                         "mu_table_nodes": self.numerics.mu_table_nodes},
            "tally": {"time_edges": L.time_edges.tolist(), "r_edges": L.r_edges.tolist(),
                      "z_edges": L.z_edges.tolist(), "mu_edges": L.mu_edges.tolist(),
                      "k_edges": L.k_edges.tolist(), "plane_k_edges": L.plane_k_edges.tolist(),
                      "plane_mu_bins": L.plane_mu_bins, "plane_thickness": L.plane_thickness,
                      "census_times": list(L.census_times)},
            "profiles": {"planes": list(self.profiles.planes), "offsets": list(self.profiles.offsets),
                         "time_bins": list(self.profiles.time_bins), "cell": list(self.profiles.cell)},
        }

    def echo(self, include_workers: bool = True) -> str:
        """Canonical JSON (sorted keys, shortest round-trip floats)."""
        return canonical_json(self.to_dict(include_workers))

    def content_hash(self) -> str:
        """git blob SHA-1 of the canonical config without the worker count."""
        return git_blob_sha1(self.echo(include_workers=False).encode())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def git_blob_sha1(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


class _Checker:
    def __init__(self):
        self.errors: list[tuple[str, str]] = []

    def err(self, path, msg):
        self.errors.append((path, msg))

    def section(self, doc, key, path, allowed, required=True):
        sub = doc.get(key) if isinstance(doc, dict) else None
        p = f"{path}.{key}" if path else key
        if sub is None:
            if required:
                self.err(p, "missing section")
            return None
        if not isinstance(sub, dict):
            self.err(p, "must be an object")
            return None
        for k in sub:
            if k not in allowed:
                self.err(f"{p}.{k}", "unknown key")
        return sub

    def number(self, sec, key, path, default=None, lo=None, lo_open=False, integer=False):
        p = f"{path}.{key}"
        if sec is None:
            return default
        if key not in sec:
            if default is None:
                self.err(p, "missing value")
            return default
        v = sec[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.err(p, "must be a number")
            return default
        if integer and not (isinstance(v, int) or (isinstance(v, float) and v.is_integer())):
            self.err(p, "must be an integer")
            return default
        v = int(v) if integer else float(v)
        if not integer and not math.isfinite(v):
            self.err(p, "must be finite")
            return default
        if lo is not None and (v <= lo if lo_open else v < lo):
            self.err(p, f"must be {'>' if lo_open else '>='} {lo}")
            return default
        return v

    def string(self, sec, key, path, default=None):
        p = f"{path}.{key}"
        if sec is None:
            return default
        if key not in sec:
            if default is None:
                self.err(p, "missing value")
            return default
        v = sec[key]
        if not isinstance(v, str):
            self.err(p, "must be a string")
            return default
        return v

    def grid(self, sec, key, path, default):
        """Edges given as a list or as {"start", "stop", "num"} (num = number of edges)."""
        p = f"{path}.{key}"
        if sec is None or key not in sec:
            return default
        v = sec[key]
        if isinstance(v, dict):
            for k in v:
                if k not in ("start", "stop", "num"):
                    self.err(f"{p}.{k}", "unknown key")
            a = self.number(v, "start", p)
            b = self.number(v, "stop", p)
            n = self.number(v, "num", p, integer=True, lo=2)
            if None in (a, b, n):
                return default
            arr = np.linspace(a, b, n)
        elif isinstance(v, list):
            if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                self.err(p, "must be a list of numbers")
                return default
            arr = np.asarray(v, dtype=np.float64)
        else:
            self.err(p, "must be a list or {start, stop, num}")
            return default
        if arr.size < 2 or not np.all(np.isfinite(arr)) or not np.all(np.diff(arr) > 0):
            self.err(p, "must be finite and strictly increasing with >= 2 edges")
            return default
        return arr


_TOP = ("medium", "pulse", "slab", "run", "numerics", "tally", "profiles")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run config; raises ``ConfigError`` listing every problem."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError([("$", f"invalid JSON: {e}")]) from None
    return config_from_dict(doc)


def config_from_dict(doc) -> RunConfig:
    ck = _Checker()
    if not isinstance(doc, dict):
        raise ConfigError([("$", "top level must be an object")])
    for k in doc:
        if k not in _TOP:
            ck.err(k, "unknown key")

    # medium
    med = ck.section(doc, "medium", "", ("c0", "correlation"))
    corr = ck.section(med, "correlation", "medium", ("kind", "strength", "corr_length")) if med is not None else None
    c0 = ck.number(med, "c0", "medium", lo=0.0, lo_open=True)
    kind = ck.string(corr, "kind", "medium.correlation")
    strength = ck.number(corr, "strength", "medium.correlation", lo=0.0)
    ell = ck.number(corr, "corr_length", "medium.correlation", lo=0.0, lo_open=True)
    medium = None
    if None not in (c0, kind, strength, ell):
        try:
            medium = MediumSpec(c0, CorrelationModel(kind, strength, ell))
        except ValueError as e:
            ck.err("medium.correlation.kind", str(e))

    # pulse
    pu = ck.section(doc, "pulse", "", ("kind_A", "kind_B", "width", "amp_A", "amp_B", "carrier"))
    pvals = dict(kind_A=ck.string(pu, "kind_A", "pulse"), kind_B=ck.string(pu, "kind_B", "pulse"),
                 width=ck.number(pu, "width", "pulse", lo=0.0, lo_open=True),
                 amp_A=ck.number(pu, "amp_A", "pulse", default=0.0),
                 amp_B=ck.number(pu, "amp_B", "pulse", default=0.0),
                 carrier=ck.number(pu, "carrier", "pulse", default=0.0, lo=0.0))
    pulse = None
    if pu is not None and None not in pvals.values():
        try:
            pulse = InitialPulse(**pvals)
        except ValueError as e:
            ck.err("pulse", str(e))

    # slab
    sl = ck.section(doc, "slab", "", ("H", "bc", "x0"))
    H = ck.number(sl, "H", "slab", lo=0.0, lo_open=True)
    bc_s = ck.string(sl, "bc", "slab")
    bc = None
    if bc_s is not None:
        try:
            bc = parse_bc(bc_s)
        except ValueError as e:
            ck.err("slab.bc", str(e))
    x0 = None
    if sl is not None:
        v = sl.get("x0")
        if v is None:
            ck.err("slab.x0", "missing value")
        elif (not isinstance(v, list) or len(v) != 3
              or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            ck.err("slab.x0", "must be a list of 3 numbers")
        else:
            x0 = tuple(float(x) for x in v)
    slab = None
    if None not in (H, bc, x0):
        try:
            slab = SlabConfig(H, bc, x0)
        except ValueError as e:
            ck.err("slab.x0", str(e))

    # run
    ru = ck.section(doc, "run", "", ("n_particles", "final_time", "seed", "chunk_size", "workers"))
    n = ck.number(ru, "n_particles", "run", lo=1, integer=True)
    T = ck.number(ru, "final_time", "run", lo=0.0, lo_open=True)
    seed = ck.number(ru, "seed", "run", default=0, lo=0, integer=True)
    if seed is not None and seed >= 2**64:
        ck.err("run.seed", "must fit in 64 bits")
    chunk = ck.number(ru, "chunk_size", "run", default=10000, lo=1, integer=True)
    workers = ck.number(ru, "workers", "run", default=1, lo=1, integer=True)

    # numerics
    nu = ck.section(doc, "numerics", "", ("source_k_nodes", "mu_table_nodes"), required=False)
    numerics = Numerics(ck.number(nu, "source_k_nodes", "numerics", default=128, lo=1, integer=True),
                        ck.number(nu, "mu_table_nodes", "numerics", default=4096, lo=16, integer=True))

    # tally
    ta = ck.section(doc, "tally", "", ("time_edges", "r_edges", "z_edges", "mu_edges", "k_edges",
                                       "plane_k_edges", "plane_mu_bins", "plane_thickness", "census_times"),
                    required=False)
    layout = None
    if None not in (medium, pulse, slab, T):
        layout = _layout(ck, ta, medium, pulse, slab, T)

    # profiles
    pr = ck.section(doc, "profiles", "", ("planes", "offsets", "time_bins", "cell"), required=False)
    profiles = None
    if layout is not None:
        profiles = _profiles(ck, pr, layout, pulse, medium, numerics)

    if ck.errors:
        raise ConfigError(ck.errors)
    return RunConfig(medium, pulse, slab, n, T, seed, layout, profiles, chunk, workers, numerics)


def _layout(ck: _Checker, ta, medium, pulse, slab, T) -> TallyLayout | None:
    lo, hi = spectral_support(pulse, medium)
    reach = medium.c0 * T
    defaults = {
        "time_edges": np.linspace(0.0, T, 31),
        "r_edges": np.linspace(0.0, reach * (1.0 + 1e-9), 7),
        "z_edges": np.linspace(0.0, slab.H, 21),
        "mu_edges": np.linspace(-1.0, 1.0, 9),
        "k_edges": np.linspace(lo, hi, 17),
        "plane_k_edges": np.linspace(lo, hi, 65),
    }
    g = {k: ck.grid(ta, k, "tally", v) for k, v in defaults.items()}
    for key, a, b in (("z_edges", 0.0, slab.H), ("mu_edges", -1.0, 1.0)):
        if g[key][0] < a or g[key][-1] > b:
            ck.err(f"tally.{key}", f"must lie within [{a}, {b}]")
    if g["r_edges"][0] < 0.0:
        ck.err("tally.r_edges", "must be >= 0")
    if g["time_edges"][0] < 0.0:
        ck.err("tally.time_edges", "must be >= 0")
    pmb = ck.number(ta, "plane_mu_bins", "tally", default=64, lo=1, integer=True)
    thick = ck.number(ta, "plane_thickness", "tally", default=1e-3, lo=0.0, lo_open=True)
    if thick is not None:
        x0n = slab.x0n
        room = min(x0n, slab.H - x0n, abs(slab.H - 2.0 * x0n) if x0n * 2 != slab.H else slab.H)
        if thick >= room:
            ck.err("tally.plane_thickness", f"must be smaller than {room} so the plane slices stay apart")
    census = ()
    if ta is not None and "census_times" in ta:
        v = ta["census_times"]
        if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                                              and math.isfinite(x) and x >= 0 for x in v):
            ck.err("tally.census_times", "must be a list of finite times >= 0")
        else:
            census = tuple(float(x) for x in v)
    try:
        return TallyLayout(plane_mu_bins=pmb or 64, plane_thickness=thick or 1e-3, census_times=census, **g)
    except ValueError as e:
        ck.err("tally", str(e))
        return None


def _profiles(ck: _Checker, pr, layout: TallyLayout, pulse, medium, numerics) -> ProfileRequest:
    planes = list(PROFILE_PLANES)
    if pr is not None and "planes" in pr:
        v = pr["planes"]
        if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
            ck.err("profiles.planes", "must be a list of plane names")
        else:
            bad = [x for x in v if x not in PROFILE_PLANES]
            if bad:
                ck.err("profiles.planes", f"unknown plane(s) {bad}; expected names from {list(PROFILE_PLANES)}")
            planes = v
    if pr is not None and "offsets" in pr:
        offs = ck.grid(pr, "offsets", "profiles", None)
        if offs is not None and offs[0] < 0.0:
            ck.err("profiles.offsets", "must be >= 0")
    else:
        k0 = pulse.carrier
        if k0 == 0.0:
            k0 = SourceSampler(pulse, medium, numerics.source_k_nodes).mean_k
        offs = default_offsets(k0)
    nt = layout.time_edges.size - 1
    tbins = list(range(nt))
    if pr is not None and "time_bins" in pr:
        v = pr["time_bins"]
        if v == "all":
            pass
        elif not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
            ck.err("profiles.time_bins", 'must be "all" or a list of bin indices')
        elif any(x < 0 or x >= nt for x in v):
            ck.err("profiles.time_bins", f"indices must lie in [0, {nt - 1}]")
        else:
            tbins = v
    cell = (float(layout.r_edges[0]), float(layout.r_edges[1]))
    if pr is not None and "cell" in pr:
        v = pr["cell"]
        if (not isinstance(v, list) or len(v) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
            ck.err("profiles.cell", "must be [r_lo, r_hi]")
        elif not (v[0] < v[1] and np.any(np.isclose(layout.r_edges, v[0], rtol=0, atol=0))
                  and np.any(layout.r_edges == v[1])):
            ck.err("profiles.cell", "must be two radius edges of the tally, r_lo < r_hi")
        else:
            cell = (float(v[0]), float(v[1]))
    return ProfileRequest(tuple(planes), tuple(float(x) for x in (offs if offs is not None else [])),
                          tuple(int(x) for x in tbins), cell)
