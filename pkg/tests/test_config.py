import copy
import json
from pathlib import Path

import pytest

from slabrt import BoundaryCondition
from slabrt.config import ConfigError, config_from_dict, git_blob_sha1, parse_bc, parse_config

EXAMPLE = Path(__file__).resolve().parents[1] / "configs" / "example.json"

MINIMAL = {
    "medium": {"c0": 1.0, "correlation": {"kind": "gaussian", "strength": 1.0, "corr_length": 1.0}},
    "pulse": {"kind_A": "gaussian", "kind_B": "gaussian", "width": 2.0, "amp_A": 1.0, "amp_B": 1.0,
              "carrier": 3.0},
    "slab": {"H": 1.0, "bc": "neumann-neumann", "x0": [0.0, 0.0, 0.4]},
    "run": {"n_particles": 100, "final_time": 2.0},
}


def errors_of(doc):
    with pytest.raises(ConfigError) as e:
        config_from_dict(doc)
    return dict(e.value.errors)


def test_example_parses():
    cfg = parse_config(EXAMPLE.read_text())
    assert cfg.slab.bc is BoundaryCondition.DIRICHLET_NEUMANN
    assert cfg.n_particles == 20000


def test_defaults_filled():
    cfg = config_from_dict(MINIMAL)
    assert cfg.seed == 0 and cfg.workers == 1 and cfg.chunk_size == 10000
    assert cfg.numerics.source_k_nodes == 128
    assert cfg.layout.time_edges[0] == 0.0 and cfg.layout.time_edges[-1] == pytest.approx(2.0)
    assert cfg.layout.r_edges[-1] > cfg.medium.c0 * cfg.final_time
    assert len(cfg.profiles.offsets) == 64
    assert set(cfg.profiles.planes) == {"x0", "xH", "x_src", "x_mirror"}


def test_echo_round_trip_and_hash():
    cfg = parse_config(EXAMPLE.read_text())
    again = parse_config(cfg.echo())
    assert again.echo() == cfg.echo()
    assert again.content_hash() == cfg.content_hash()
    cfg.workers = 7
    assert cfg.content_hash() == again.content_hash()
    assert "workers" not in json.loads(cfg.echo(include_workers=False))["run"]


def test_git_blob_sha1_known_value():
    # `git hash-object` of "hello\n"
    assert git_blob_sha1(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_all_errors_reported_with_paths():
    doc = copy.deepcopy(MINIMAL)
    doc["medium"]["c0"] = -1
    doc["medium"]["correlation"]["kind"] = "lorentzian"
    doc["run"]["n_particles"] = 0
    doc["slab"]["x0"] = [0.0, 0.0]
    doc["bogus"] = 1
    errs = errors_of(doc)
    assert {"medium.c0", "run.n_particles", "slab.x0", "bogus"} <= set(errs)


def test_source_on_boundary_rejected():
    doc = copy.deepcopy(MINIMAL)
    doc["slab"]["x0"] = [0.0, 0.0, 1.0]
    errs = errors_of(doc)
    assert "slab.x0" in errs and "H" in errs["slab.x0"]


def test_missing_section():
    doc = copy.deepcopy(MINIMAL)
    del doc["pulse"]
    assert "pulse" in errors_of(doc)


def test_unknown_nested_key_and_bad_types():
    doc = copy.deepcopy(MINIMAL)
    doc["run"]["speed"] = 3
    doc["run"]["seed"] = "x"
    doc["tally"] = {"time_edges": [0.0, 1.0, 0.5]}
    errs = errors_of(doc)
    assert "run.speed" in errs and "run.seed" in errs and "tally.time_edges" in errs


def test_invalid_json():
    with pytest.raises(ConfigError) as e:
        parse_config("{not json")
    assert e.value.errors[0][0] == "$"


@pytest.mark.parametrize("s,bc", [("neumann-dirichlet", BoundaryCondition.NEUMANN_DIRICHLET),
                                  ("NeumannDirichlet", BoundaryCondition.NEUMANN_DIRICHLET),
                                  ("DirichletNeumann", BoundaryCondition.DIRICHLET_NEUMANN),
                                  ("dirichlet_dirichlet", BoundaryCondition.DIRICHLET_DIRICHLET)])
def test_bc_names(s, bc):
    assert parse_bc(s) is bc


def test_bad_bc():
    with pytest.raises(ValueError):
        parse_bc("robin")


def test_grid_spec_object():
    doc = copy.deepcopy(MINIMAL)
    doc["tally"] = {"time_edges": {"start": 0.0, "stop": 2.0, "num": 5}}
    cfg = config_from_dict(doc)
    assert cfg.layout.time_edges.tolist() == [0.0, 0.5, 1.0, 1.5, 2.0]


def test_report_shape():
    doc = copy.deepcopy(MINIMAL)
    doc["run"]["final_time"] = 0
    with pytest.raises(ConfigError) as e:
        config_from_dict(doc)
    rep = e.value.report()
    assert rep["error"] == "validation"
    assert rep["problems"][0]["path"] == "run.final_time"
