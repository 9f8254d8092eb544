import numpy as np
import pytest

from limiam.discover import (
    CausalOrder,
    DegenerateDataError,
    _recursive_order,
    direct_limiam,
    direct_lingam_baseline,
    edges_from_B,
    estimate_B,
    shd,
)
from limiam.meanind import FiniteOrderScorer, KernelScorer, MomentScorer, SieveScorer
from limiam.simulate import (
    AuxDistribution,
    Independent,
    Threshold,
    WeightedDag,
    generate_dataset,
    sample_dag,
    sample_disturbances,
)


def two_node_data(T, b21=0.5, seed=0):
    rng = np.random.default_rng(seed)
    e1 = rng.uniform(-1, 1, T)
    e2 = rng.uniform(-1, 1, T)
    return np.column_stack([e1, b21 * e1 + e2])


class TestCausalOrder:
    def test_validates_permutation(self):
        with pytest.raises(ValueError):
            CausalOrder((0, 0, 1))
        assert list(CausalOrder((2, 0, 1))) == [2, 0, 1]


class TestDirectLimiam:
    def test_two_node_finite_order_monte_carlo(self):
        hits = 0
        for seed in range(100):
            x = two_node_data(5000, seed=seed)
            result = direct_limiam(x, FiniteOrderScorer(4), seed=seed)
            hits += tuple(result.order) == (0, 1)
        assert hits >= 95

    def test_kernel_separates_threshold_direction(self):
        # strong conditional heteroskedasticity: the true source should get
        # the visibly smaller candidate score at large T
        eps = sample_disturbances(
            2, 8000, AuxDistribution.UNIFORM, Threshold(), seed=1
        )
        dag = WeightedDag((0, 1), np.array([[0.0, 0.0], [0.7, 0.0]]))
        x = generate_dataset(dag, eps)
        result = direct_limiam(x, KernelScorer(), seed=0)
        first_stage = result.diagnostics[0]
        assert first_stage.scores[0] < first_stage.scores[1]
        assert tuple(result.order) == (0, 1)

    @pytest.mark.parametrize("scorer", [MomentScorer(), FiniteOrderScorer(4)])
    def test_relabeling_equivariance(self, scorer):
        x = generate_dataset(
            sample_dag(3, seed=2),
            sample_disturbances(3, 400, AuxDistribution.BIMODAL, Independent(), seed=3),
        )
        sigma = (2, 0, 1)  # y[:, k] = x[:, sigma[k]]
        y = x[:, sigma]
        base = direct_limiam(x, scorer, seed=0)
        relabeled = direct_limiam(y, scorer, seed=0)
        mapped = tuple(sigma[j] for j in relabeled.order)
        assert mapped == tuple(base.order)

    def test_relabeling_equivariance_kernel(self):
        x = generate_dataset(
            sample_dag(3, seed=4),
            sample_disturbances(3, 300, AuxDistribution.UNIFORM, Threshold(), seed=5),
        )
        sigma = (1, 2, 0)
        base = direct_limiam(x, KernelScorer(), seed=9)
        relabeled = direct_limiam(x[:, sigma], KernelScorer(), seed=9)
        assert tuple(sigma[j] for j in relabeled.order) == tuple(base.order)

    def test_scale_invariance_of_selection(self):
        x = two_node_data(800, seed=6)
        x = np.column_stack([x, x[:, 0] * 0.3 + np.random.default_rng(7).uniform(-1, 1, 800)])
        for scorer in (MomentScorer(), FiniteOrderScorer(4), KernelScorer()):
            base = direct_limiam(x, scorer, seed=1)
            scaled = x.copy()
            scaled[:, 1] *= 137.0
            rescored = direct_limiam(scaled, scorer, seed=1)
            assert tuple(rescored.order) == tuple(base.order)

    def test_determinism(self):
        x = two_node_data(600, seed=8)
        a = direct_limiam(x, KernelScorer(), seed=11)
        b = direct_limiam(x, KernelScorer(), seed=11)
        assert tuple(a.order) == tuple(b.order)
        assert np.array_equal(a.B, b.B)
        assert a.diagnostics[0].scores == b.diagnostics[0].scores

    def test_diagnostics_shape(self):
        x = np.random.default_rng(9).uniform(-1, 1, size=(100, 4))
        result = direct_limiam(x, MomentScorer(), seed=0)
        assert len(result.diagnostics) == 4
        assert sum(rec.forced for rec in result.diagnostics) == 1
        assert result.diagnostics[-1].forced
        # B strictly lower triangular in order coordinates
        perm = list(result.order)
        reordered = result.B[np.ix_(perm, perm)]
        assert np.allclose(np.triu(reordered), 0.0)

    def test_zero_variance_column_named(self):
        x = np.random.default_rng(10).uniform(size=(50, 3))
        x[:, 1] = 2.5
        with pytest.raises(DegenerateDataError, match="column 1"):
            direct_limiam(x, MomentScorer(), seed=0)

    def test_residual_telescoping(self):
        rng = np.random.default_rng(11)
        x = generate_dataset(
            sample_dag(4, seed=12),
            sample_disturbances(4, 400, AuxDistribution.UNIFORM, Independent(), seed=13),
        )
        captured = []

        def probing_select(work, active, stage):
            captured.append((work.copy(), tuple(active)))
            return {j: float(j) for j in active}  # always remove lowest index

        _recursive_order(x, probing_select)
        n = x.shape[0]
        for stage in range(1, len(captured)):
            work, active = captured[stage]
            design = np.column_stack([np.ones(n), x[:, :stage]])
            proj = design @ np.linalg.lstsq(design, x, rcond=None)[0]
            for col in active:
                expected = x[:, col] - proj[:, col]
                got = work[:, col]
                scale = float(expected @ got) / float(got @ got)
                assert scale > 0
                assert np.max(np.abs(scale * got - expected)) < 1e-8 * max(
                    1.0, np.max(np.abs(expected))
                )

    def test_input_validation(self):
        with pytest.raises(ValueError):
            direct_limiam(np.zeros((3, 5)), MomentScorer())
        with pytest.raises(ValueError):
            direct_limiam(np.zeros((10, 1)), MomentScorer())


class TestEstimateB:
    def test_noiseless_chain(self):
        x1 = np.linspace(-1, 1, 50)
        x = np.column_stack([x1, 0.7 * x1])
        x[:, 1] += 1e-9 * np.random.default_rng(14).normal(size=50)  # break exact collinearity
        b = estimate_B(x, (0, 1))
        assert b[1, 0] == pytest.approx(0.7, abs=1e-6)
        assert b[0, 1] == 0.0

    def test_recovers_simulated_coefficients(self):
        dag = sample_dag(4, seed=15)
        eps = sample_disturbances(4, 50_000, AuxDistribution.UNIFORM, Independent(), seed=16)
        x = generate_dataset(dag, eps)
        b = estimate_B(x, dag.perm)
        assert np.max(np.abs(b - dag.coefficients_observed())) < 0.05

    def test_reversed_order_gives_reverse_regression_slope(self):
        x = two_node_data(20_000, b21=0.6, seed=17)
        b = estimate_B(x, (1, 0))
        slope = np.cov(x[:, 0], x[:, 1])[0, 1] / np.var(x[:, 1], ddof=1)
        assert b[0, 1] == pytest.approx(slope, rel=1e-6)
        assert b[0, 1] != pytest.approx(0.6, rel=0.05)

    def test_rank_deficient_block(self):
        x1 = np.linspace(0, 1, 30)
        x = np.column_stack([x1, 2.0 * x1, np.random.default_rng(18).uniform(size=30)])
        with pytest.raises(DegenerateDataError):
            estimate_B(x, (0, 1, 2))


class TestDirectLingamBaseline:
    def test_independent_design_succeeds(self):
        hits = 0
        for seed in range(20):
            x = generate_dataset(
                sample_dag(3, seed=seed),
                sample_disturbances(
                    3, 500, AuxDistribution.UNIFORM, Independent(), seed=100 + seed
                ),
            )
            hits += tuple(direct_lingam_baseline(x).order) == sample_dag(3, seed=seed).perm
        assert hits >= 16

    def test_threshold_design_degrades_vs_kernel(self):
        lingam_hits = kernel_hits = 0
        for seed in range(10):
            dag = sample_dag(3, seed=seed)
            x = generate_dataset(
                dag,
                sample_disturbances(
                    3, 500, AuxDistribution.UNIFORM, Threshold(), seed=200 + seed
                ),
            )
            lingam_hits += tuple(direct_lingam_baseline(x).order) == dag.perm
            kernel_hits += tuple(direct_limiam(x, KernelScorer(), seed=seed).order) == dag.perm
        assert kernel_hits > lingam_hits

    def test_gaussian_returns_permutation(self):
        x = np.random.default_rng(19).normal(size=(400, 2))
        result = direct_lingam_baseline(x)
        assert sorted(result.order) == [0, 1]


class TestMetrics:
    def test_shd_identical(self):
        edges = {(0, 1), (1, 2)}
        assert shd(edges, edges) == 0

    def test_shd_reversed_edge(self):
        assert shd({(0, 1)}, {(1, 0)}) == 2

    def test_shd_missing_edge(self):
        assert shd(set(), {(0, 1)}) == 1

    def test_edges_threshold_zero_exact(self):
        dag = sample_dag(3, seed=20)
        b = dag.coefficients_observed()
        edges = edges_from_B(b, 0.0)
        expected = {
            (dag.perm[j], dag.perm[i])
            for i in range(3)
            for j in range(i)
            if dag.B[i, j] != 0.0
        }
        assert edges == expected

    def test_edges_high_threshold_empty(self):
        b = np.array([[0.0, 0.0], [0.5, 0.0]])
        assert edges_from_B(b, 0.9) == frozenset()

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            edges_from_B(np.zeros((2, 2)), -0.1)
