"""Monte-Carlo co-simulation.

Proves:
 Group 1 - counter RNG: determinism, stream separation, value ranges
 Group 2 - schedules: indexing, serialization, validation
 Group 3 - simulate: bit-exact reproducibility, a fully deterministic
           closed-form case, delivery statistics, trace bookkeeping
 Group 4 - running cost: exact cycle averages for the worked example
 Group 5 - the empirical decay check passes where delivery is rich
           enough and fails where the schedule starves a link
 Group 6 - CSV export determinism
"""

import dataclasses
import io
from fractions import Fraction

import numpy as np
import pytest

from fadectrl.cosim import (
    Schedule,
    SimConfig,
    average_cost_trace,
    counter_normals,
    counter_uniforms,
    empirical_lyapunov_check,
    simulate,
    write_trace_csv,
)
from fadectrl.errors import (
    InsufficientTrials,
    PreconditionViolated,
    ScheduleViolation,
    ValueOutOfRange,
)
from fadectrl.scenario import load_scenario_text

OPTIMAL = Schedule(prefix_inputs=(), cycle_inputs=(7, 7, 4, 7), alpha0=4)
# reaches the self-loop at state 2 and stays: long-run mean 27/40
SELF_LOOP = Schedule(prefix_inputs=(7,), cycle_inputs=(4,), alpha0=4)
# parks on state 3 where link 1's success probability is far below its
# threshold: the decay check must catch plant 1 and clear plant 2
STARVING = Schedule(prefix_inputs=(8,), cycle_inputs=(7,), alpha0=4)

SURE_DELIVERY = """\
name: sure delivery probe
fast_steps_per_slow: 4

plants:
  - name: probe
    a_closed: 0.5
    a_open: 2.0
    quality_weight: 1.0
    decay_rate: 0.9
    noise_cov: 0.0
    power_price: 0.25

agents:
  count: 1
  kappa: 2
  weights:
    1: {1: 1}
  initial_state: [0]

constraints:
  states: [1]
  inputs: [[0]]

channel:
  local_states: 1
  transmit_policy:
    - [1]
  fading:
    1: {decode: [1.0], dist: [[1.0]]}

cost:
  input_weight: 0
  input_costs: [3, 3]

simulation:
  initial_plant_states: [[1.0]]
"""


# ── Group 1: counter RNG ─────────────────────────────────────────────────────

def test_uniforms_deterministic_and_in_range():
    a = counter_uniforms(9, 2, 5, 0, 1000)
    b = counter_uniforms(9, 2, 5, 0, 1000)
    assert np.array_equal(a, b)
    assert a.dtype == np.float64 and a.shape == (1000,)
    assert np.all(a > 0.0) and np.all(a <= 1.0)


def test_uniform_streams_are_separated():
    base = counter_uniforms(9, 2, 5, 0, 256)
    for other in (
        counter_uniforms(10, 2, 5, 0, 256),  # seed
        counter_uniforms(9, 3, 5, 0, 256),   # stream
        counter_uniforms(9, 2, 6, 0, 256),   # step
        counter_uniforms(9, 2, 5, 1, 256),   # draw
    ):
        assert not np.array_equal(base, other)


def test_normals_shape_and_moments():
    z = counter_normals(7, 1, 0, 3, 4000)
    assert z.shape == (4000, 3)
    assert np.array_equal(z, counter_normals(7, 1, 0, 3, 4000))
    assert abs(z.mean()) < 0.05
    assert abs(z.var() - 1.0) < 0.05


# ── Group 2: schedules ───────────────────────────────────────────────────────

def test_schedule_indexing():
    sched = Schedule((9, 8), (1, 2, 3))
    assert [sched.input_at(k) for k in range(8)] == [9, 8, 1, 2, 3, 1, 2, 3]


def test_schedule_serialization_roundtrip():
    assert Schedule.from_dict(OPTIMAL.to_dict()) == OPTIMAL
    assert Schedule.from_dict({"cycle_inputs": [5]}) == Schedule((), (5,), 0)


def test_schedule_needs_a_cycle():
    with pytest.raises(ValueOutOfRange):
        Schedule((1,), ())


def test_schedule_from_synthesis(synthesis):
    sched = Schedule.from_synthesis(synthesis)
    assert sched == OPTIMAL


def test_sim_config_validation():
    with pytest.raises(ValueOutOfRange):
        SimConfig(0, 10, 1)
    with pytest.raises(ValueOutOfRange):
        SimConfig(10, 0, 1)
    with pytest.raises(ValueOutOfRange):
        SimConfig(10, 10, -1)


# ── Group 3: simulation ──────────────────────────────────────────────────────

def test_simulate_bit_exact_reproducibility(scenario):
    config = SimConfig(horizon_fast=80, trials=64, seed=123, x0=scenario.x0)
    one = simulate(scenario, OPTIMAL, config)
    two = simulate(scenario, OPTIMAL, config)
    assert np.array_equal(one.deliveries, two.deliveries)
    for x, y in zip(one.states, two.states):
        assert np.array_equal(x, y)
    other = simulate(scenario, OPTIMAL, SimConfig(80, 64, 124, x0=scenario.x0))
    assert not np.array_equal(one.deliveries, other.deliveries)


def test_simulate_trace_bookkeeping(scenario):
    trace = simulate(scenario, OPTIMAL, SimConfig(90, 8, 5, x0=scenario.x0))
    assert trace.tau == 40
    assert trace.horizon == 90 and trace.trials == 8
    assert trace.alpha_slow == (4, 2, 5)  # ceil(90 / 40) slow steps
    assert trace.inputs_slow == (7, 7, 4)
    assert trace.entry_fast == 0
    assert trace.states[0].shape == (8, 91, 2)
    assert trace.states[1].shape == (8, 91, 1)
    assert trace.deliveries.shape == (8, 90, 2)
    assert np.array_equal(trace.states[0][:, 0, :], np.ones((8, 2)))


def test_simulate_sure_delivery_closed_form():
    scn = load_scenario_text(SURE_DELIVERY)
    trace = simulate(scn, Schedule((), (1,), 1), SimConfig(12, 128, 77, x0=scn.x0))
    assert np.all(trace.deliveries == 1)
    for l in range(13):
        assert np.array_equal(trace.states[0][:, l, 0], np.full(128, 0.5 ** l))
    # power 0.25 every fast step, no input weight: the average is constant
    assert np.array_equal(trace.running_cost, np.full(12, 0.25))
    check = empirical_lyapunov_check(trace, scn.wcs, from_step=0)
    assert check.passed


def test_simulate_delivery_frequencies(scenario):
    trace = simulate(scenario, OPTIMAL, SimConfig(160, 3000, 42, x0=scenario.x0))
    lam = scenario.success.as_array()
    for slow, a in enumerate(trace.alpha_slow):
        window = trace.deliveries[:, slow * 40 : (slow + 1) * 40, :]
        count = window.shape[0] * window.shape[1]
        for i in range(2):
            p = lam[i, a - 1]
            bound = 3.0 * np.sqrt(p * (1 - p) / count)
            assert abs(window[:, :, i].mean() - p) <= bound


def test_simulate_schedule_validation(scenario):
    with pytest.raises(ScheduleViolation):
        simulate(scenario, Schedule((), (1,), 4), SimConfig(40, 4, 1))
    with pytest.raises(ScheduleViolation):
        # admissible input, but it exits the admissible states (4 -> 8)
        simulate(scenario, Schedule((), (4,), 4), SimConfig(40, 4, 1))
    with pytest.raises(ScheduleViolation):
        simulate(scenario, Schedule((), (7, 7, 4, 7), 2), SimConfig(40, 4, 1))


def test_simulate_needs_success_coverage(scenario):
    gutted = dataclasses.replace(scenario, tables=None)
    with pytest.raises(PreconditionViolated):
        simulate(gutted, OPTIMAL, SimConfig(40, 4, 1))


# ── Group 4: running cost ────────────────────────────────────────────────────

def test_cost_trace_exact_cycle_average(scenario):
    trace = average_cost_trace(scenario, OPTIMAL, 160)
    assert trace.shape == (160,)
    # one full tour costs 96 over 160 fast steps
    assert abs(trace[-1] - 0.6) < 1e-12
    # first two slow steps: 80 fast steps of power 0.325 plus two input bumps
    assert abs(trace[79] - 46 / 80) < 1e-12


def test_cost_trace_long_run_values(scenario):
    optimal = average_cost_trace(scenario, OPTIMAL, 40_000)
    assert abs(optimal[-1] - 0.6) < 1e-10
    slow = average_cost_trace(scenario, SELF_LOOP, 40_000)
    assert abs(slow[-1] - 0.675) < 1e-3
    assert optimal[-1] < slow[-1]


def test_cost_trace_matches_simulation_column(scenario):
    trace = simulate(scenario, OPTIMAL, SimConfig(100, 4, 3, x0=scenario.x0))
    assert np.array_equal(
        trace.running_cost, average_cost_trace(scenario, OPTIMAL, 100)
    )


# ── Group 5: the decay check ─────────────────────────────────────────────────

def test_decay_check_passes_under_optimal_schedule(scenario):
    trace = simulate(scenario, OPTIMAL, SimConfig(160, 2000, 7, x0=scenario.x0))
    check = empirical_lyapunov_check(trace, scenario.wcs)
    assert check.passed
    assert all(p.passed for p in check.plants)
    assert all(p.worst_margin > 0 for p in check.plants)


def test_decay_check_catches_starved_link(scenario):
    trace = simulate(scenario, STARVING, SimConfig(200, 400, 11, x0=scenario.x0))
    assert trace.alpha_slow == (4, 3, 3, 3, 3)
    assert trace.entry_fast == 40
    check = empirical_lyapunov_check(trace, scenario.wcs)
    assert not check.passed
    assert not check.plants[0].passed  # link 1 sees 0.09 < its 0.29 threshold
    assert check.plants[1].passed      # link 2 sees 0.25 > its 0.10 threshold


def test_decay_check_needs_trials(scenario):
    trace = simulate(scenario, OPTIMAL, SimConfig(40, 50, 1, x0=scenario.x0))
    with pytest.raises(InsufficientTrials):
        empirical_lyapunov_check(trace, scenario.wcs)


def test_decay_check_window_validation(scenario):
    trace = simulate(scenario, OPTIMAL, SimConfig(40, 120, 1, x0=scenario.x0))
    with pytest.raises(ValueOutOfRange):
        empirical_lyapunov_check(trace, scenario.wcs, from_step=40)


# ── Group 6: CSV export ──────────────────────────────────────────────────────

def test_trace_csv_layout_and_determinism(scenario):
    def render():
        trace = simulate(scenario, OPTIMAL, SimConfig(50, 3, 9, x0=scenario.x0))
        buf = io.StringIO()
        write_trace_csv(trace, buf)
        return buf.getvalue()

    text = render()
    assert text == render()
    lines = text.splitlines()
    assert lines[0] == "l,k,alpha,x1_1,x1_2,x2_1,delivered1,delivered2,running_cost"
    assert len(lines) == 51
    first = lines[1].split(",")
    assert first[:3] == ["0", "0", "4"]
    assert float(first[3]) == 1.0  # the configured start state
    assert first[6] in ("0", "1")
    assert float(first[8]) > 0
