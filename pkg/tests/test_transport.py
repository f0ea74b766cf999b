import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slabrt import (CorrelationModel, CounterRNG, InitialPulse, MediumSpec, Particle, SlabConfig, TallySet,
                    fold_into_slab, step_to_next_event, total_xsection)
from slabrt.oracle import tally_mismatches, unfolded_reference_run
from slabrt.source import sample_initial_state
from slabrt.transport import NonFiniteTallyError, Problem, _run_chunk, coherent_amplitude, simulate


@pytest.mark.parametrize("x,k,expected", [
    (0.3, 2.0, (0.3, 2.0, 0)),
    (1.5, 2.0, (0.5, -2.0, 1)),
    (-0.3, 2.0, (0.3, -2.0, 1)),
    (2.5, 2.0, (0.5, 2.0, 2)),
])
def test_fold_examples(x, k, expected):
    y, kn, n = fold_into_slab(x, k, 1.0)
    assert (y, kn, n) == pytest.approx(expected, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50), st.floats(0.1, 3.0))
def test_fold_properties(x, H):
    y, kn, n = fold_into_slab(x, 1.0, H)
    assert 0.0 <= y <= H
    assert kn == (-1.0 if n % 2 else 1.0)
    # agrees with the mod-2H rule away from wall points
    r = math.fmod(x, 2 * H) % (2 * H)
    ref = r if r <= H else 2 * H - r
    assert y == pytest.approx(ref, abs=1e-9 * max(1.0, abs(x)))
    assert fold_into_slab(y, kn, H)[:2] == (y, kn)


def test_ballistic_free_flight():
    spec = MediumSpec(1.5, CorrelationModel("gaussian", 0.0, 1.0))
    slab = SlabConfig(1.0, "neumann-neumann", (0.2, -0.1, 0.4))
    K = np.array([0.3, 0.4, 1.2])
    p = Particle(np.array(slab.x0), K, 1.0)
    q = step_to_next_event(p, spec, slab, CounterRNG(0), final_time=2.0)
    u = K / np.linalg.norm(K)
    free = np.array(slab.x0) + 1.5 * 2.0 * u
    assert q.time == 2.0 and q.n_scatters == 0
    assert q.position[:2] == pytest.approx(free[:2], abs=1e-14)
    zf, kn, n = fold_into_slab(free[2], K[2], 1.0)
    assert q.position[2] == pytest.approx(zf, abs=1e-11)
    assert q.K[2] == pytest.approx(kn) and q.n_reflections == n
    with pytest.raises(ValueError):
        step_to_next_event(p, spec, slab, CounterRNG(0))
    with pytest.raises(ValueError):
        step_to_next_event(Particle(np.array(slab.x0), np.zeros(3), 1.0), spec, slab, CounterRNG(0), 1.0)
    assert total_xsection(MediumSpec(1.0, CorrelationModel("gaussian", 1.0, 1.0)), 0.0) == 0.0


def test_step_preserves_k_and_weight(gauss):
    slab = SlabConfig(1.0, "dirichlet-dirichlet", (0.0, 0.0, 0.5))
    p = Particle(np.array(slab.x0), np.array([0.0, 0.6, 0.8]) * 2.0, 0.25)
    rng = CounterRNG(1)
    for _ in range(30):
        p = step_to_next_event(p, gauss, slab, rng)
        assert p.k == pytest.approx(2.0, rel=1e-14)
        assert 0.0 <= p.position[2] <= 1.0
        assert p.weight == 0.25
    assert p.n_scatters == 30


def test_mean_flight_time(gauss):
    sig = total_xsection(gauss, 1.0)
    tau = -np.log(CounterRNG(8).random(1_000_000)) / sig
    se = tau.std() / math.sqrt(tau.size)
    assert abs(tau.mean() - 1.0 / sig) < 3 * se
    # step_to_next_event consumes the first uniform for the flight
    slab = SlabConfig(1.0, "neumann-neumann", (0.0, 0.0, 0.5))
    q = step_to_next_event(Particle(np.array(slab.x0), np.array([0.0, 0.0, 1.0]), 1.0), gauss, slab,
                           CounterRNG(8))
    assert q.time == tau[0]


def test_single_particle_api_matches_batch_kernel(small_problem):
    prob = small_problem
    T = 4.0
    batch = simulate(prob, 1, T, seed=99, chunk_size=1)
    rng = CounterRNG(99, 0)
    p = sample_initial_state(prob.pulse, prob.medium, prob.slab, rng, 1, prob.sampler)
    ts = TallySet.empty(prob.layout)
    while p.time < T:
        p = step_to_next_event(p, prob.medium, prob.slab, rng, final_time=T, tallies=ts)
    np.testing.assert_allclose(ts.main_sum, batch.main_sum, rtol=1e-9, atol=1e-12 * batch.main_sum.max())
    assert ts.main_sum.sum() == pytest.approx(batch.main_sum.sum(), rel=1e-12)


def test_folded_equals_unfolded(small_problem):
    a = simulate(small_problem, 3000, 4.0, seed=5, chunk_size=700)
    b = unfolded_reference_run(small_problem, 3000, 4.0, seed=5, chunk_size=700)
    assert tally_mismatches(a, b) == []


def test_comparator_catches_one_flipped_reflection(small_problem):
    a = simulate(small_problem, 300, 4.0, seed=5, chunk_size=300)
    b = unfolded_reference_run(small_problem, 300, 4.0, seed=5, chunk_size=300)
    # a wrong reflection sign moves one boundary deposit to the mirrored μ bin
    idx = np.argwhere(b.plane_sum[0] > 0)[0]
    t, r, m, k = idx
    b.plane_sum[0, t, r, m, k], b.plane_sum[0, t, r, -1 - m, k] = (b.plane_sum[0, t, r, -1 - m, k],
                                                                   b.plane_sum[0, t, r, m, k])
    assert tally_mismatches(a, b) == ["plane_sum"]


def test_ballistic_reference_agreement(pulse_k3, small_layout):
    spec = MediumSpec(1.0, CorrelationModel("gaussian", 0.0, 1.0))
    prob = Problem.build(spec, pulse_k3, SlabConfig(1.0, "neumann-neumann", (0.0, 0.0, 0.4)), small_layout)
    a = simulate(prob, 500, 4.0, seed=2)
    assert tally_mismatches(a, unfolded_reference_run(prob, 500, 4.0, seed=2)) == []
    assert a.census_coherent.tolist() == [500, 500, 500]


def test_worker_count_invariance(small_problem):
    ref = simulate(small_problem, 2000, 4.0, seed=3, chunk_size=150, workers=1)
    for w in (2, 8):
        assert tally_mismatches(ref, simulate(small_problem, 2000, 4.0, seed=3, chunk_size=150, workers=w)) == []


def test_bulk_tallies_independent_of_bc(gauss, pulse_k3, small_layout):
    runs = []
    for bc in ("neumann-neumann", "dirichlet-dirichlet", "dirichlet-neumann", "neumann-dirichlet"):
        prob = Problem.build(gauss, pulse_k3, SlabConfig(1.0, bc, (0.0, 0.0, 0.4)), small_layout)
        runs.append(simulate(prob, 500, 4.0, seed=8))
    for r in runs[1:]:
        assert tally_mismatches(runs[0], r) == []


def test_energy_conserved_per_time_bin(small_problem):
    ts = simulate(small_problem, 2000, 4.0, seed=4, chunk_size=500)
    e = ts.energy_per_time_bin()
    assert np.allclose(e, small_problem.sampler.Z, rtol=1e-12)


def test_unscattered_fraction(gauss):
    # narrow spectrum around |K| = 1
    pulse = InitialPulse("gaussian", "gaussian", 400.0, 1.0, 1.0, 1.0)
    from slabrt import TallyLayout
    L = TallyLayout([0.0, 1.5], [0.0, 2.0], [0.0, 1.0], [-1.0, 1.0], [0.0, 2.0], [0.0, 2.0], census_times=(1.0,))
    prob = Problem.build(gauss, pulse, SlabConfig(1.0, "neumann-neumann", (0, 0, 0.5)), L)
    n = 200_000
    ts = simulate(prob, n, 1.5, seed=1, chunk_size=50_000)
    f = ts.census_coherent[0] / n
    p = math.exp(-total_xsection(gauss, 1.0))
    se = math.sqrt(p * (1 - p) / n)
    print(f"unscattered fraction at t=1: {f:.5f}, e^-Σ = {p:.5f} (SE {se:.5f})")
    assert abs(f - p) < 3 * se


def test_nonfinite_contribution_reports_particle(small_problem):
    with pytest.raises(NonFiniteTallyError) as e:
        _run_chunk(small_problem, (1, 0), 17, 3, math.inf, 4.0)
    assert e.value.particle_index == 17


def test_simulate_rejects_bad_arguments(small_problem):
    with pytest.raises(ValueError):
        simulate(small_problem, 0, 1.0, 0)
    with pytest.raises(ValueError):
        simulate(small_problem, 10, 0.0, 0)


def test_coherent_amplitude(gauss, pulse_k3):
    slab = SlabConfig(1.0, "neumann-neumann", (0.0, 0.0, 0.4))
    K = np.array([0.0, 1.0, 2.0])
    a0 = coherent_amplitude(0, 0.0, (0.0, 0.1, 0.3, 0.5), K, slab, gauss, pulse_k3)
    from slabrt import amplitude_A
    assert a0 == float(amplitude_A(pulse_k3, gauss, K))
    assert coherent_amplitude(1, 0.0, (0.0, 0.1, 0.3, 0.5), K, slab, gauss, pulse_k3) == 0.0
    assert coherent_amplitude(1, 0.0, (0.0, 0.1, 1.3, 1.5), K, slab, gauss, pulse_k3) == a0
    # damping ratio between two times (point stays in a large cell)
    big = (0.0, 10.0, -10.0, 10.0)
    r = (coherent_amplitude(0, 2.0, big, K, slab, gauss, pulse_k3)
         / coherent_amplitude(0, 1.0, big, K, slab, gauss, pulse_k3))
    assert r == pytest.approx(math.exp(-total_xsection(gauss, float(np.linalg.norm(K)))), rel=1e-13)
    with pytest.raises(ValueError):
        coherent_amplitude(0, -1.0, big, K, slab, gauss, pulse_k3)
