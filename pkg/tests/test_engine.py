import math
import warnings

import numpy as np
import pytest

from dpconsensus import engine
from dpconsensus._kernels import get_backend
from dpconsensus.engine import (
    DivergenceError,
    apply_update,
    disagreement,
    limit_statistics,
    record_points,
    run,
    run_many,
    step,
)
from dpconsensus.graphs import SignedGraph, check_structural_balance
from dpconsensus.noise import DEFAULT_SEED
from dpconsensus.schedules import (
    ConstantNoise,
    DivergentSeriesError,
    GeometricNoise,
    GeometricStep,
    PowerNoise,
    PowerStep,
)

from conftest import random_balanced_graph

TWO_PLUS = SignedGraph.from_edges(2, [(1, 2, 1.0)])
TWO_MINUS = SignedGraph.from_edges(2, [(1, 2, -1.0)])
HALF = PowerStep(0.5, 1.0, 1.0)  # alpha(0) = 0.5


def test_noiseless_averaging_step():
    out = step(np.array([0.0, 2.0]), TWO_PLUS, HALF, None, k=0)
    np.testing.assert_allclose(out, [1.0, 1.0])


def test_antagonistic_fixed_points():
    out = step(np.array([2.0, 2.0]), TWO_MINUS, HALF, None, k=0)
    np.testing.assert_allclose(out, [0.0, 0.0])
    out = step(np.array([2.0, -2.0]), TWO_MINUS, HALF, None, k=0)
    np.testing.assert_allclose(out, [2.0, -2.0])


def test_injected_noise_hand_expansion():
    x = np.array([3.0, -1.0])
    omega = np.array([0.7, -0.4])
    out = step(x, TWO_PLUS, HALF, None, k=0, omega=omega)
    # x_1(1) = x_1 - alpha*(x_1 - x_2 - w_2)
    assert out[0] == pytest.approx(x[0] - 0.5 * (x[0] - x[1] - omega[1]))
    assert out[1] == pytest.approx(x[1] - 0.5 * (x[1] - x[0] - omega[0]))


def test_scalar_update_matches_matrix_form():
    rng = np.random.default_rng(19)
    for n in (3, 6, 12):
        w, _ = random_balanced_graph(rng, n)
        g = SignedGraph(w)
        lap = g.laplacian()
        x = rng.normal(size=n)
        for _ in range(100):
            omega = rng.normal(size=n)
            a = 0.08
            scalar = apply_update(x, g.weights, a, x + omega)
            matrix = x - a * (lap @ x) + a * (g.weights @ omega)
            np.testing.assert_allclose(scalar, matrix, rtol=1e-13, atol=1e-13)
            x = matrix


def test_gauge_equivariance_exact():
    rng = np.random.default_rng(23)
    w, _ = random_balanced_graph(rng, 6)
    g = SignedGraph(w)
    s = check_structural_balance(g)
    flipped = SignedGraph(s[:, None] * w * s[None, :])
    x = rng.normal(size=6)
    xf = s * x
    for k in range(50):
        omega = rng.normal(size=6)
        x = step(x, g, HALF, None, k, omega=omega)
        xf = step(xf, flipped, HALF, None, k, omega=s * omega)
        np.testing.assert_array_equal(xf, s * x)


def test_kernel_matches_reference_step(fig1a, gauge1a, x0):
    from dpconsensus.noise import laplace_sample

    sched, noise = PowerStep(0.3, 1, 1), PowerNoise(1, 0.1, 1, 1)
    tr = run(x0, fig1a, gauge1a, sched, noise, 30, stride=1, run_index=4)
    x = np.array(x0, dtype=float)
    for k in range(30):
        b = noise.scale(k)
        omega = np.array(
            [laplace_sample(DEFAULT_SEED, 4, a, k, b) for a in range(5)]
        )
        x = step(x, fig1a, sched, noise, k, omega=omega)
        np.testing.assert_allclose(tr.x_series[k + 1], x, rtol=1e-12, atol=1e-12)


def test_zero_noise_conserves_gauge_sum(fig1a, gauge1a, x0):
    tr = run(x0, fig1a, gauge1a, PowerStep(0.3, 1, 1), None, 500, stride=1)
    np.testing.assert_allclose(
        tr.gauge_mean_series, np.full(len(tr.ks), 3.6), rtol=0, atol=1e-12
    )


def test_noiseless_star_reaches_average():
    g = SignedGraph.from_edges(5, [(1, 2, 1.0), (1, 3, 1.0), (1, 4, 1.0), (1, 5, 1.0)])
    s = check_structural_balance(g)
    x0 = np.array([5.0, -1.0, 2.0, 8.0, -3.0])
    tr = run(x0, g, s, PowerStep(0.5, 1, 0.6), None, 20_000)
    np.testing.assert_allclose(tr.x_series[-1], np.full(5, x0.mean()), atol=1e-3)


def test_geometric_baseline_freezes(fig1a, gauge1a, x0):
    _, res = run_many(
        x0, fig1a, gauge1a, GeometricStep(0.8), GeometricNoise(1, 0.9),
        1000, runs=3, tail_start=200,
    )
    assert res.max_tail_delta.max() < 1e-9


def test_record_points_structure():
    pts = record_points(1000, stride=10)
    assert pts[0] == 0 and pts[-1] == 1000
    assert {1, 2, 3} <= set(pts.tolist())  # log densification near zero
    assert np.all(np.diff(pts) > 0)


def test_run_records_consistent_series(fig1a, gauge1a, x0):
    tr = run(x0, fig1a, gauge1a, PowerStep(0.3, 1, 1), PowerNoise(1, 0.1, 1, 1), 200, collect_y=True)
    assert tr.v_series[0] == pytest.approx(155.2)
    assert np.all(tr.v_series >= 0)
    for idx in (0, len(tr.ks) - 1):
        assert tr.v_series[idx] == pytest.approx(disagreement(tr.x_series[idx], gauge1a))
        assert tr.gauge_mean_series[idx] == pytest.approx((gauge1a * tr.x_series[idx]).mean())
    assert np.isnan(tr.y_series[-1]).all()  # no transmission recorded at k = T


def test_trajectory_csv(tmp_path, fig1a, gauge1a, x0):
    tr = run(x0, fig1a, gauge1a, PowerStep(0.3, 1, 1), PowerNoise(1, 0.1, 1, 1), 100, collect_y=True)
    p = tmp_path / "t.csv"
    tr.to_csv(p)
    header = p.read_text().splitlines()[0]
    assert header == "k,V,gauge_mean," + ",".join(
        [f"x_{i}" for i in range(1, 6)] + [f"y_{i}" for i in range(1, 6)]
    )


def test_divergence_abort(fig1a, gauge1a, x0):
    diverging = PowerStep(50.0, 1.0, 1.0)  # alpha(0)*lambda_max >> 2
    with pytest.raises(DivergenceError), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run(x0, fig1a, gauge1a, diverging, None, 100)


def test_stability_warning(fig1a, gauge1a, x0):
    with pytest.warns(RuntimeWarning, match="transiently amplify"):
        run_many(x0, fig1a, gauge1a, PowerStep(1.0, 1.0, 0.9), None, 10, runs=1)


def test_backends_agree(fig1a, gauge1a, x0):
    sched, noise = PowerStep(0.3, 1, 1), PowerNoise(1, 0.1, 1, 1)
    pure = get_backend("pure")
    compiled = get_backend("compiled")
    ks, a = run_many(x0, fig1a, gauge1a, sched, noise, 500, 8, backend=pure,
                     collect_states=True, collect_y=True, tail_start=400)
    _, b = run_many(x0, fig1a, gauge1a, sched, noise, 500, 8, backend=compiled,
                    collect_states=True, collect_y=True, tail_start=400)
    np.testing.assert_allclose(a.v, b.v, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.x_final, b.x_final, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.x_rec, b.x_rec, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.y_rec[:, :-1], b.y_rec[:, :-1], rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(a.max_tail_delta, b.max_tail_delta, rtol=1e-9)


def test_runs_reproducible(fig1a, gauge1a, x0):
    sched, noise = PowerStep(0.3, 1, 1), PowerNoise(1, 0.1, 1, 1)
    _, a = run_many(x0, fig1a, gauge1a, sched, noise, 300, 5, seed=DEFAULT_SEED)
    _, b = run_many(x0, fig1a, gauge1a, sched, noise, 300, 5, seed=DEFAULT_SEED)
    np.testing.assert_array_equal(a.v, b.v)
    np.testing.assert_array_equal(a.x_final, b.x_final)


def test_disagreement_values(gauge1a):
    assert disagreement(gauge1a, gauge1a) == 0.0
    assert disagreement(np.ones(4), np.ones(4)) == 0.0
    assert disagreement(np.array([1.0, 0.0]), np.ones(2)) == pytest.approx(0.5)


def test_limit_statistics_zero_noise(stats1a, gauge1a, x0):
    ls = limit_statistics(x0, gauge1a, stats1a.degrees, PowerStep(0.3, 1, 1), None)
    assert ls.limit_mean == pytest.approx(3.6)
    assert ls.limit_variance == 0.0


def test_limit_statistics_basel():
    ls = limit_statistics(
        [0.0, 0.0], [1.0, 1.0], np.array([1.0, 1.0]), PowerStep(1, 1, 1), ConstantNoise(1.0)
    )
    assert ls.limit_variance == pytest.approx(math.pi**2 / 6, rel=1e-6)
    assert ls.limit_variance >= math.pi**2 / 6  # truncation + tail over-bounds


def test_limit_statistics_tail_shrinks_with_truncation(stats1a, gauge1a, x0):
    sched, noise = PowerStep(1, 1, 0.9), PowerNoise(1, 0.1, 1, 0)
    small = limit_statistics(x0, gauge1a, stats1a.degrees, sched, noise, k_trunc=10_000)
    large = limit_statistics(x0, gauge1a, stats1a.degrees, sched, noise, k_trunc=1_000_000)
    assert large.tail_bound < small.tail_bound
    assert small.limit_variance >= large.limit_variance  # bound tightens
    assert abs(small.limit_variance - large.limit_variance) < 1e-3


def test_limit_statistics_divergent(stats1a, gauge1a, x0):
    with pytest.raises(DivergentSeriesError):
        limit_statistics(x0, gauge1a, stats1a.degrees, PowerStep(1, 1, 0.9), PowerNoise(1, 0.5, 1, 0))
