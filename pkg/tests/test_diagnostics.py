import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealml.diagnostics import (
    apr,
    lt_scan,
    participation_ratio,
    rescaled_time_table,
    squared_distance,
)
from annealml.dynamics import AnnealSchedule, ProbDist, evolve_many, output_distribution
from annealml.errors import ConfigError
from annealml.sampling import ShotConfig, sample_shots

from conftest import make_chain


def random_dist(seed, dim):
    rng = np.random.default_rng(seed)
    p = rng.random(dim)
    return p / p.sum()


class TestParticipationRatio:
    def test_uniform_is_dimension_exact(self):
        for n in (1, 3, 8, 12):
            dim = 1 << n
            assert participation_ratio(ProbDist(np.full(dim, 1.0 / dim))) == dim

    def test_delta_is_one(self):
        p = np.zeros(16)
        p[5] = 1.0
        assert participation_ratio(ProbDist(p)) == 1.0

    def test_two_equal_peaks(self):
        p = np.zeros(8)
        p[1] = p[6] = 0.5
        assert participation_ratio(ProbDist(p)) == pytest.approx(2.0)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            participation_ratio(np.array([0.5, 0.2]))

    @given(st.integers(0, 2**32 - 1), st.sampled_from([2, 8, 64]))
    @settings(max_examples=40, deadline=None)
    def test_bounds_and_permutation_invariance(self, seed, dim):
        p = random_dist(seed, dim)
        pr = participation_ratio(p)
        assert 1.0 - 1e-12 <= pr <= dim + 1e-9
        perm = np.random.default_rng(seed + 1).permutation(dim)
        assert participation_ratio(p[perm]) == pytest.approx(pr)


class TestApr:
    def test_all_uniform(self):
        dists = [ProbDist(np.full(8, 0.125))] * 5
        assert apr(dists) == 8.0

    def test_mixed_delta_uniform(self):
        delta = ProbDist(np.array([1.0, 0.0]))
        uniform = ProbDist(np.array([0.5, 0.5]))
        assert apr([delta, uniform]) == pytest.approx(1.5)

    def test_empty_rejected(self):
        with pytest.raises(ConfigError):
            apr([])

    def test_localizes_with_time(self, linear_schedule):
        """Longer anneals concentrate the distribution, shrinking APR."""
        problems = [make_chain(5, seed=s, coupling_scale=0.8) for s in range(6)]
        values = {}
        for t in (2.0, 8.0):
            states = evolve_many(problems, linear_schedule, t, dt_target=0.01)
            values[t] = apr([output_distribution(s) for s in states])
        assert values[8.0] <= values[2.0]


class TestSquaredDistance:
    def test_zero_iff_identical(self):
        p = random_dist(1, 8)
        assert squared_distance(p, p) == 0.0
        q = random_dist(2, 8)
        assert squared_distance(p, q) > 0.0

    def test_symmetric(self):
        p, q = random_dist(3, 16), random_dist(4, 16)
        assert squared_distance(p, q) == pytest.approx(squared_distance(q, p))

    def test_delta_vs_uniform_hand_value(self):
        delta = np.array([1.0, 0.0])
        uniform = np.array([0.5, 0.5])
        assert squared_distance(delta, uniform) == pytest.approx(0.5)


class TestLtScan:
    def test_exact_match_at_grid_point(self, linear_schedule):
        problems = [make_chain(3, seed=s) for s in range(3)]
        states = evolve_many(problems, linear_schedule, 2.0, dt_target=0.01)
        refs = [output_distribution(s).probs for s in states]
        scan = lt_scan(refs, problems, linear_schedule, [1.0, 2.0, 4.0],
                       dt_target=0.01)
        assert scan.t_star == 2.0
        assert scan.mean_l[1] == pytest.approx(0.0, abs=1e-12)

    def test_planted_time_recovery_with_shots(self, linear_schedule):
        problems = [make_chain(4, seed=s, coupling_scale=0.8) for s in range(20)]
        states = evolve_many(problems, linear_schedule, 3.0, dt_target=0.01)
        refs = [
            sample_shots(output_distribution(s), ShotConfig(10_000, seed=9),
                         stream=(i,)).probs
            for i, s in enumerate(states)
        ]
        grid = [1.0, 1.5, 2.25, 3.375, 5.0]
        scan = lt_scan(refs, problems, linear_schedule, grid, dt_target=0.01)
        planted_pos = 3   # 3.375 is the grid point nearest 3.0 in log spacing
        star_pos = list(grid).index(scan.t_star)
        assert abs(star_pos - planted_pos) <= 1

    def test_grid_validation(self, linear_schedule):
        problems = [make_chain(2, seed=0)]
        refs = [np.full(4, 0.25)]
        with pytest.raises(ConfigError):
            lt_scan(refs, problems, linear_schedule, [])
        with pytest.raises(ConfigError):
            lt_scan(refs, problems, linear_schedule, [2.0, 1.0])
        with pytest.raises(ConfigError):
            lt_scan(refs, problems[:0], linear_schedule, [1.0])


class TestCollapse:
    def test_rescaled_abscissa_arithmetic(self):
        t_grid = np.array([1.0, 2.0])
        result = rescaled_time_table(
            t_grid, {10: np.array([100.0, 50.0]), 8: np.array([80.0, 40.0])})
        n10_rows = [r for r in result.rows if r[0] == 10]
        assert n10_rows[0][2] == pytest.approx(1.0 / 2**4)   # T / 2^(0.4*10)

    def test_identical_curves_score_zero(self):
        t_grid = np.array([1.0, 2.0, 4.0])
        curve = np.array([32.0, 16.0, 8.0])
        result = rescaled_time_table(t_grid, {8: curve, 9: curve}, alpha=0.0)
        assert result.score_unrescaled == pytest.approx(0.0, abs=1e-12)
        assert result.score_rescaled == pytest.approx(0.0, abs=1e-12)

    def test_perfect_collapse_after_rescale(self):
        """Curves generated from one master curve of T/2^(0.4 N) collapse."""
        t_grid = np.geomspace(0.5, 32.0, 12)
        master = lambda x: 1000.0 * (1.0 + x) ** -1.5
        curves = {n: master(t_grid / 2 ** (0.4 * n)) for n in (8, 10, 12)}
        result = rescaled_time_table(t_grid, curves)
        assert result.score_rescaled < result.score_unrescaled
        assert result.score_rescaled < 0.02

    def test_requires_two_curves(self):
        with pytest.raises(ConfigError):
            rescaled_time_table(np.array([1.0]), {8: np.array([10.0])})

    def test_disjoint_windows_rejected(self):
        t_grid = np.array([1.0, 1.1])
        curves = {2: np.array([3.0, 2.9]), 20: np.array([900.0, 890.0])}
        with pytest.raises(ConfigError):
            rescaled_time_table(t_grid, curves, alpha=0.9)
