"""Command line, tallies.json and profiles.csv.

Subcommands: ``run`` (simulate, then write tallies.json and profiles.csv),
``profiles`` (recompute profiles.csv from a saved tallies.json), ``oracle``
(print derived constants) and ``validate`` (parse only).

Exit codes: 0 success, 2 I/O failure, 3 validation failure, 4 numerical
failure. Errors go to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, canonical_json, config_from_dict, parse_config
from .interference import boundary_profile, localization_profile, onset_times
from .tally import TallySet
from .transport import NonFiniteTallyError, simulate

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_NUMERIC = 0, 2, 3, 4
FORMAT = "slabrt-tallies/1"
CSV_COLUMNS = ("plane", "time", "offset", "e_pp", "e_vv", "e_pv", "baseline_pp", "baseline_vv",
               "onset_flag", "status")


class IOFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# tallies.json
# ---------------------------------------------------------------------------


def _encode_array(a: np.ndarray) -> dict:
    a = np.ascontiguousarray(a)
    kind = "int64" if a.dtype.kind in "iu" else "float64"
    data = a.ravel().tolist()
    if kind == "float64" and not all(math.isfinite(x) for x in data):
        raise ValueError("nonfinite value in tally array")
    return {"dtype": kind, "shape": list(a.shape), "data": data}


def _decode_array(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.int64 if d["dtype"] == "int64" else np.float64).reshape(d["shape"])


def tallies_document(cfg: RunConfig, tallies: TallySet, config_hash: str | None = None) -> str:
    """Canonical JSON text of a run: config (no worker count), its hash, metadata and arrays."""
    meta = {k: v for k, v in tallies.meta.items()}
    L = tallies.layout
    doc = {
        "format": FORMAT,
        "config": cfg.to_dict(include_workers=False),
        "config_hash": config_hash or cfg.content_hash(),
        "meta": meta,
        "edges": {"time": L.time_edges.tolist(), "r": L.r_edges.tolist(), "z": L.z_edges.tolist(),
                  "mu": L.mu_edges.tolist(), "k": L.k_edges.tolist(), "plane_k": L.plane_k_edges.tolist(),
                  "plane_mu": L.plane_mu_edges().tolist()},
        "arrays": {name: _encode_array(a) for name, a in tallies.arrays().items()},
    }
    return canonical_json(doc) + "\n"


def write_tallies(path: Path, cfg: RunConfig, tallies: TallySet) -> None:
    text = tallies_document(cfg, tallies)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise IOFailure(f"cannot write {path}: {e}") from None


def read_tallies(path: Path) -> tuple[RunConfig, TallySet, dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise IOFailure(f"cannot read {path}: {e}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise IOFailure(f"{path} is not valid JSON: {e}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise IOFailure(f"{path} is not a {FORMAT} document")
    cfg = config_from_dict(doc["config"])
    arr = {k: _decode_array(v) for k, v in doc["arrays"].items()}
    ts = TallySet(cfg.layout, arr["main_sum"], arr["main_sum_inv_k2"], arr["main_cnt"], arr["plane_sum"],
                  arr["plane_cnt"], arr["plane_mu_batches"], arr["coherent_time"], arr["census_coherent"],
                  dict(doc["meta"]))
    return cfg, ts, doc


# ---------------------------------------------------------------------------
# profiles.csv
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def profile_rows(cfg: RunConfig, tallies: TallySet) -> list[tuple]:
    """One row per (plane, time bin, offset) of the requested profiles."""
    req = cfg.profiles
    L = tallies.layout
    offsets = np.asarray(req.offsets, dtype=np.float64)
    rows = []
    for plane in req.planes:
        for tb in req.time_bins:
            t_lo, t_hi = float(L.time_edges[tb]), float(L.time_edges[tb + 1])
            tc = 0.5 * (t_lo + t_hi)
            if plane in ("x0", "xH"):
                rep = boundary_profile(tallies, cfg.medium, cfg.slab, "0" if plane == "x0" else "H", tb, offsets)
                flag = False
            else:
                rep = localization_profile(cfg.slab, cfg.medium, cfg.pulse, plane, (t_lo, t_hi), req.cell,
                                           offsets, tallies=tallies)
                if rep.count == 0:
                    rep.status = "insufficient statistics"
                flag = rep.onset_in_bin
            status = rep.status.replace(" ", "_")
            if rep.ill_conditioned:
                status = "ill_conditioned" if status == "ok" else status + "+ill_conditioned"
            for i, x in enumerate(offsets):
                rows.append((plane, tc, x, rep.e_pp[i], rep.e_vv[i], rep.e_pv[i], rep.baseline.e_pp,
                             rep.baseline.e_vv, flag, status))
    return rows


def profiles_csv(cfg: RunConfig, tallies: TallySet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in profile_rows(cfg, tallies):
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _write_text(path: Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise IOFailure(f"cannot write {path}: {e}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _load_config(path: str, workers: int | None, seed: int | None) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise IOFailure(f"cannot read config {path}: {e}") from None
    cfg = parse_config(text)
    if workers is not None:
        if workers < 1:
            raise ConfigError([("--workers", "must be >= 1")])
        cfg.workers = workers
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError([("--seed", "must be an unsigned 64-bit integer")])
        cfg.seed = seed
    return cfg


def cmd_run(args) -> int:
    cfg = _load_config(args.config, args.workers, args.seed)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IOFailure(f"cannot create {out}: {e}") from None
    tallies = simulate(cfg.problem(), cfg.n_particles, cfg.final_time, cfg.seed, cfg.chunk_size, cfg.workers)
    write_tallies(out / "tallies.json", cfg, tallies)
    # profiles are always computed from the saved document, as `profiles` does
    cfg2, ts2, _ = read_tallies(out / "tallies.json")
    _write_text(out / "profiles.csv", profiles_csv(cfg2, ts2))
    return EXIT_OK


def cmd_profiles(args) -> int:
    src = Path(args.tallies) if args.tallies else Path(args.out) / "tallies.json"
    cfg, ts, _ = read_tallies(src)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise IOFailure(f"cannot create {out}: {e}") from None
    _write_text(out / "profiles.csv", profiles_csv(cfg, ts))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_config(args.config, args.workers, args.seed)
    sys.stdout.write(canonical_json({"status": "ok", "config_hash": cfg.content_hash()}) + "\n")
    return EXIT_OK


def cmd_oracle(args) -> int:
    from .oracle import derived_constants
    sys.stdout.write(json.dumps(derived_constants(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _report({"error": "usage", "message": message})
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="slabrt", description="Monte-Carlo wave-energy transport in a slab")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn, need_cfg in (("run", cmd_run, True), ("validate", cmd_validate, True),
                               ("profiles", cmd_profiles, False), ("oracle", cmd_oracle, False)):
        s = sub.add_parser(name)
        s.set_defaults(func=fn)
        if need_cfg:
            s.add_argument("--config", required=True)
        s.add_argument("--out", default=".")
        s.add_argument("--workers", type=int, default=None)
        s.add_argument("--seed", type=int, default=None)
        if name == "profiles":
            s.add_argument("--tallies", default=None, help="tallies.json (default: <out>/tallies.json)")
    return p


def _report(obj) -> None:
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        _report(e.report())
        return EXIT_VALIDATION
    except IOFailure as e:
        _report({"error": "io", "message": str(e)})
        return EXIT_IO
    except NonFiniteTallyError as e:
        _report({"error": "nonfinite", "particle_index": e.particle_index, "message": str(e)})
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
