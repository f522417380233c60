from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kinoplan.dynamics import SinglePendulumModel, is_admissible, replay, segment_torque_ratio
from kinoplan.interp import make_interpolator
from kinoplan.planner import (PlannerConfig, Roadmap, SampleBounds, SteeringFailure,
                              band_density_ratio, check_tree, extract_solution, plan, sample,
                              steer, swing_count, velocity_band_diagnostic)
from kinoplan.statespace import State, Trajectory, TrajectorySegment, state_distance

PENDULUM = SinglePendulumModel(length=0.2, mass=8.0, tau_max=5.0)
SOC1 = make_interpolator("soc1")


@pytest.fixture(scope="module")
def solved():
    """A quick tau_max = 5 swing-up (seed 2 solves in a few thousand extensions)."""
    result = plan(PENDULUM, SOC1, PlannerConfig(rng_seed=2))
    assert result.solved
    return result


class TestSample:
    bounds = SampleBounds(1, 25.0)

    def test_inside_box(self):
        rng = np.random.default_rng(0)
        xs = np.array([sample(self.bounds, rng).as_array() for _ in range(100_000)])
        assert np.all((xs[:, 0] > -np.pi) & (xs[:, 0] <= np.pi))
        assert np.all(np.abs(xs[:, 1]) <= 25.0)
        # uniform means: sd of the mean is half-range / sqrt(3 n)
        n = xs.shape[0]
        assert abs(xs[:, 0].mean()) <= 3 * np.pi / np.sqrt(3 * n)
        assert abs(xs[:, 1].mean()) <= 3 * 25.0 / np.sqrt(3 * n)

    def test_seeded(self):
        r1, r2 = np.random.default_rng(9), np.random.default_rng(9)
        assert [sample(self.bounds, r1) for _ in range(50)] == [sample(self.bounds, r2) for _ in range(50)]


class TestSteer:
    def test_bottom_rest_fails(self):
        with pytest.raises(SteeringFailure) as exc:
            steer(PENDULUM, SOC1, State([0.0], [0.0]), State([0.0], [0.0]))
        assert exc.value.reason == "interpolation"

    def test_small_arc_succeeds(self):
        seg = steer(PENDULUM, SOC1, State([0.0], [0.5]), State([0.05], [0.6]))
        assert seg.duration == pytest.approx(0.05 / 0.55)
        assert seg.evaluate(0.0)[2][0] == pytest.approx(1.1)
        # exact torque maximum sits at the end of the arc
        expected = PENDULUM.inertia * 1.1 + 7.848 * np.sin(0.05)
        ratio = segment_torque_ratio(PENDULUM, np.array([seg.duration]), seg.coeffs[None], 32)[0]
        assert ratio == pytest.approx(expected / 5.0)

    def test_weak_motor_fails(self):
        with pytest.raises(SteeringFailure) as exc:
            steer(SinglePendulumModel(tau_max=0.1), SOC1, State([0.0], [0.5]), State([0.05], [0.6]))
        assert exc.value.reason == "torque" and exc.value.ratio > 1.0


class TestPlan:
    def test_start_in_goal(self):
        cfg = PlannerConfig(init_state=State([np.pi - 0.01], [0.0]))
        result = plan(PENDULUM, SOC1, cfg)
        assert result.solved and result.extensions_used == 0 and result.goal_node == 0
        assert len(result.solution) == 0

    def test_zero_budget(self):
        result = plan(PENDULUM, SOC1, PlannerConfig(n_iterations=0))
        assert result.status == "budget_exhausted" and result.nodes_created == 0

    def test_strong_motor_sanity(self):
        strong = SinglePendulumModel(tau_max=50.0)
        used = [plan(strong, SOC1, PlannerConfig(rng_seed=s)).extensions_used for s in range(1, 11)]
        assert all(u < 150_000 for u in used)
        assert sum(u <= 5000 for u in used) >= 9

    def test_solution_reaches_goal(self, solved):
        end = solved.solution.end_state()
        assert state_distance(end, State([np.pi], [0.0])) <= 0.1
        assert solved.solution.start_state() == State([0.0], [0.0])
        assert solved.roadmap.state(solved.goal_node) == end

    def test_replay_oracle(self, solved):
        final = replay(PENDULUM, solved.solution, 1e-3).final_state()
        assert state_distance(final, solved.roadmap.state(solved.goal_node)) <= 1e-4

    def test_admissible_at_four_times_resolution(self, solved):
        ok, ratio = is_admissible(PENDULUM, solved.solution, 4 * 32)
        assert ok and ratio <= 1.0

    def test_tree_invariants(self, solved):
        rm = solved.roadmap
        assert check_tree(rm) == []
        p = rm.parents[1:]
        d, c, ok = SOC1.batch(rm.q[p], rm.qd[p], rm.q[1:], rm.qd[1:])
        assert np.all(ok)
        assert np.all(segment_torque_ratio(PENDULUM, d, c, 32) <= 1.0)
        stored = np.array([rm.segment(i).coeffs for i in range(1, rm.size)])
        np.testing.assert_allclose(stored, c, atol=1e-12)

    def test_counters(self, solved):
        assert solved.nodes_created == solved.roadmap.size - 1
        assert solved.roadmap.iterations[-1] == solved.extensions_used
        assert solved.interpolation_failures + solved.torque_failures > 0

    def test_soc1_spreads_in_velocity(self):
        result = plan(PENDULUM, SOC1, PlannerConfig(rng_seed=1, n_iterations=20_000))
        assert np.max(np.abs(result.roadmap.qd)) > 10.0

    @pytest.mark.parametrize("index", ["kdtree", "linear"])
    def test_deterministic(self, index):
        cfg = PlannerConfig(rng_seed=3, n_iterations=1500, nn_index=index)
        a, b = plan(PENDULUM, SOC1, cfg), plan(PENDULUM, SOC1, cfg)
        np.testing.assert_array_equal(a.roadmap.q, b.roadmap.q)
        np.testing.assert_array_equal(a.roadmap.qd, b.roadmap.qd)
        np.testing.assert_array_equal(a.roadmap.parents, b.roadmap.parents)

    def test_index_choice_is_invisible(self):
        a = plan(PENDULUM, SOC1, PlannerConfig(rng_seed=4, n_iterations=1500, nn_index="kdtree"))
        b = plan(PENDULUM, SOC1, PlannerConfig(rng_seed=4, n_iterations=1500, nn_index="linear"))
        np.testing.assert_array_equal(a.roadmap.qd, b.roadmap.qd)
        np.testing.assert_array_equal(a.roadmap.parents, b.roadmap.parents)

    def test_longer_budget_extends_prefix(self):
        short = plan(PENDULUM, SOC1, PlannerConfig(rng_seed=1, n_iterations=1000))
        long = plan(PENDULUM, SOC1, PlannerConfig(rng_seed=1, n_iterations=2000))
        n = short.roadmap.size
        assert long.roadmap.size >= n
        np.testing.assert_array_equal(long.roadmap.q[:n], short.roadmap.q)
        np.testing.assert_array_equal(long.roadmap.parents[:n], short.roadmap.parents)
        assert np.all(np.diff(long.roadmap.iterations) >= 0)

    def test_solved_status_is_stable(self, solved):
        again = plan(PENDULUM, SOC1, PlannerConfig(rng_seed=2, n_iterations=solved.extensions_used + 5000))
        assert again.solved and again.extensions_used == solved.extensions_used
        assert again.goal_node == solved.goal_node

    def test_quad_planner_adds_reached_states(self):
        result = plan(SinglePendulumModel(tau_max=50.0), make_interpolator("quad"),
                      PlannerConfig(rng_seed=1, n_iterations=300))
        rm = result.roadmap
        for i in range(1, rm.size):
            q, qd = rm.segment(i).end()
            assert rm.state(i) == State(q, qd)

    def test_progress_callback(self):
        calls = []
        plan(PENDULUM, SOC1, PlannerConfig(n_iterations=2000), progress=lambda it, rm: calls.append(it))
        assert calls[:2] == [1000, 2000]

    def test_default_weight_is_range_normalised(self):
        assert PlannerConfig().metric_weight == pytest.approx(np.pi / 25)
        assert PlannerConfig(velocity_weight=1.0).metric_weight == 1.0

    @pytest.mark.parametrize("kwargs", [dict(n_iterations=-1), dict(k_parents=0), dict(goal_tolerance=0.0),
                                        dict(admissibility_checks=1), dict(omega_max=-1.0),
                                        dict(velocity_weight=0.0),
                                        dict(goal_state=State([0.0, 0.0], [0.0, 0.0]))])
    def test_config_validation(self, kwargs):
        with pytest.raises(ValueError):
            PlannerConfig(**kwargs)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 400))
def test_tree_invariant_property(seed, n):
    result = plan(SinglePendulumModel(tau_max=20.0), SOC1, PlannerConfig(rng_seed=seed, n_iterations=n))
    rm = result.roadmap
    assert check_tree(rm) == []
    assert result.nodes_created == rm.size - 1
    for i in range(1, rm.size):
        seg = rm.segment(i)
        parent = rm.state(int(rm.parents[i]))
        q0, v0 = seg.start()
        assert state_distance(State(q0, v0), parent) <= 1e-9
        q1, v1 = seg.end()
        assert state_distance(State(q1, v1), rm.state(i)) <= 1e-9


class TestExtractSolution:
    def test_root(self):
        assert len(extract_solution(Roadmap(State([0.0], [0.0])), 0)) == 0

    def test_two_nodes(self):
        rm = Roadmap(State([0.0], [1.0]))
        seg = SOC1.interpolate(State([0.0], [1.0]), State([0.5], [2.0])).segments[0]
        rm.add(State([0.5], [2.0]), 0, seg, 1)
        traj = extract_solution(rm, 1)
        assert len(traj) == 1
        np.testing.assert_array_equal(traj.segments[0].coeffs, seg.coeffs)
        assert traj.duration == seg.duration

    def test_unwraps_across_seam(self):
        rm = Roadmap(State([np.pi - 0.1], [1.0]))
        a, b = State([np.pi - 0.1], [1.0]), State([-np.pi + 0.1], [1.0])
        rm.add(b, 0, SOC1.interpolate(a, b).segments[0], 1)
        c = State([-np.pi + 0.3], [1.0])
        rm.add(c, 1, SOC1.interpolate(b, c).segments[0], 2)
        traj = extract_solution(rm, 2)
        assert traj.eval(traj.duration)[0][0] == pytest.approx(np.pi + 0.3)

    @pytest.mark.parametrize("node", [-1, 5])
    def test_unknown_node(self, node):
        with pytest.raises(ValueError):
            extract_solution(Roadmap(State([0.0], [0.0])), node)


class TestDiagnostics:
    def test_band_root_only(self):
        band = velocity_band_diagnostic(Roadmap(State([0.3], [-2.5])), PENDULUM, 1.0)
        assert band.max_speed == 2.5
        assert band.band == pytest.approx(5.0 / PENDULUM.inertia / 6.0)
        assert band.swingup_speed == pytest.approx(np.sqrt(6 * 9.81 / 0.2))
        assert band.swingup_speed_8gl == pytest.approx(np.sqrt(8 * 9.81 / 0.2))

    def test_density_ratio(self):
        v = np.r_[np.zeros(10), np.full(5, 7.0)]
        # 10 nodes over width 4 against 5 over width 20
        assert band_density_ratio(v) == pytest.approx((10 / 4) / (5 / 20))
        assert band_density_ratio(np.zeros(3)) == float("inf")

    def test_swing_count(self):
        seg = TrajectorySegment(2.0, np.array([[0.0, 1.0, -1.0, 0.0]]))   # qd = 1 - 2t
        assert swing_count(Trajectory([seg])) == 1
        assert swing_count(Trajectory()) == 0

    def test_swing_count_of_solution(self, solved):
        assert swing_count(solved.solution) >= 1


def test_path_to_rejects_unknown():
    with pytest.raises(ValueError):
        Roadmap(State([0.0], [0.0])).path_to(3)
