"""Test functions, weights, variances, and the studentized maximum."""

import numpy as np
import pytest

from monotest import (
    DataError,
    DegenerateVarianceError,
    Sample,
    Scale,
    ScaleSet,
    build_custom_set,
    evaluate_field,
    multivariate_field,
    sensitivity_A,
    studentized_field,
    variance_hat,
    weights_w,
    weights_w_naive,
)

# aliased so pytest does not collect them as test functions
from monotest import test_function_b as eval_b
from monotest import test_function_b_naive as eval_b_naive
from monotest.scales import EPANECHNIKOV, UNIFORM, build_z_local_set

TWO_POINT = Sample(x=[0.25, 0.75], y=[1.0, 0.0])
MID_SCALE = Scale(x=0.5, h=0.5)


def test_two_point_weights():
    # w_1 = sign(0.75 - 0.25) * K(-0.5) * K(0.5) = +0.31640625, w_2 its negative
    w = weights_w(TWO_POINT, MID_SCALE)
    np.testing.assert_array_equal(w, [0.31640625, -0.31640625])
    np.testing.assert_array_equal(weights_w_naive(TWO_POINT, MID_SCALE), w)


def test_two_point_b_positive_for_decreasing_y():
    # y falls while x rises, so the pairwise comparison is positive
    assert eval_b(TWO_POINT, MID_SCALE) == 0.31640625
    assert eval_b_naive(TWO_POINT, MID_SCALE) == 0.31640625


def test_two_point_variance_and_T():
    w = weights_w(TWO_POINT, MID_SCALE)
    v = variance_hat(w, [1.0, 1.0])
    assert v == 0.200225830078125  # 2 * 0.31640625^2
    field = studentized_field(TWO_POINT, ScaleSet(scales=(MID_SCALE,)), [1.0, 1.0])
    np.testing.assert_allclose(field.T, 1.0 / np.sqrt(2.0), rtol=0, atol=0)
    np.testing.assert_allclose(field.A_n, 1.0 / np.sqrt(2.0), rtol=0, atol=0)
    assert field.b[0] == 0.31640625
    assert field.v_hat[0] == v
    np.testing.assert_array_equal(field.active_ids, [0])


def _random_config(rng, n_max=60):
    n = int(rng.integers(5, n_max))
    x = rng.uniform(-1.5, 1.5, n)
    if rng.random() < 0.4:
        # force ties through coarse rounding
        x = np.round(x, 1)
    y = rng.normal(size=n)
    kern = EPANECHNIKOV if rng.random() < 0.5 else UNIFORM
    s = Scale(
        x=float(rng.uniform(-1.2, 1.2)),
        h=float(rng.uniform(0.1, 1.5)),
        k=float(rng.choice([0.0, 0.5, 1.0, 2.0])),
    )
    return Sample(x=x, y=y), s, kern


def test_fast_matches_naive_on_random_configs():
    rng = np.random.default_rng(515)
    for _ in range(80):
        sample, s, kern = _random_config(rng)
        w_fast = weights_w(sample, s, kern)
        w_naive = weights_w_naive(sample, s, kern)
        scale_w = max(np.max(np.abs(w_naive)), 1e-30)
        np.testing.assert_allclose(w_fast, w_naive, rtol=0, atol=1e-10 * scale_w)
        b_fast = eval_b(sample, s, kern)
        b_naive = eval_b_naive(sample, s, kern)
        scale_b = max(abs(b_naive), 1e-30)
        assert abs(b_fast - b_naive) <= 1e-10 * scale_b


def test_k_one_far_from_origin():
    # the centered prefix-sum path must not cancel when the window sits at x ~ 1e3
    rng = np.random.default_rng(99)
    x = rng.uniform(1000.0, 1001.0, 80)
    sample = Sample(x=x, y=rng.normal(size=80))
    s = Scale(x=1000.5, h=0.4, k=1.0)
    b_fast = eval_b(sample, s)
    b_naive = eval_b_naive(sample, s)
    np.testing.assert_allclose(b_fast, b_naive, rtol=1e-10)


def test_constant_y_gives_exactly_zero_b():
    rng = np.random.default_rng(7)
    for _ in range(20):
        x = rng.uniform(0, 1, 30)
        sample = Sample(x=x, y=np.full(30, 3.7))
        assert eval_b(sample, Scale(0.5, 0.6)) == 0.0


def test_b_nonpositive_on_noiseless_monotone():
    rng = np.random.default_rng(11)
    for _ in range(50):
        x = np.sort(rng.uniform(-1, 1, 40))
        y = np.interp(x, [-1.0, 0.0, 1.0], [0.0, 0.25, 1.0])  # nondecreasing
        sample = Sample(x=x, y=y)
        s = Scale(float(rng.uniform(-1, 1)), float(rng.uniform(0.2, 1.0)))
        assert eval_b(sample, s) <= 0.0


def test_location_shift_leaves_b_unchanged_exactly():
    # b is accumulated from adjacent y differences; on lattice y with a
    # dyadic shift both y + c and its differences are exact, so b is bitwise
    # stable (a generic float shift perturbs y_i + c in the last ulp)
    rng = np.random.default_rng(23)
    x = rng.uniform(0, 1, 50)
    y = rng.integers(-64, 65, size=50) / 64.0
    s = Scale(0.4, 0.3)
    b0 = eval_b(Sample(x=x, y=y), s)
    for c in (1.0, -17.25, 1024.0):
        assert eval_b(Sample(x=x, y=y + c), s) == b0


def test_generic_shift_moves_b_at_roundoff_only():
    rng = np.random.default_rng(27)
    x = rng.uniform(0, 1, 50)
    y = rng.normal(size=50)
    s = Scale(0.4, 0.3)
    b0 = eval_b(Sample(x=x, y=y), s)
    b1 = eval_b(Sample(x=x, y=y + 1e6), s)
    np.testing.assert_allclose(b1, b0, rtol=0, atol=1e-5)


def test_T_location_and_scale_invariance():
    rng = np.random.default_rng(29)
    x = rng.uniform(0, 1, 60)
    y = rng.integers(-128, 129, size=60) / 64.0
    sig = rng.uniform(0.5, 2.0, 60)
    set_ = build_custom_set(np.unique(x)[::7], [0.5, 0.25])
    T0 = studentized_field(Sample(x=x, y=y), set_, sig).T
    # dyadic shift of lattice y: exact
    T_shift = studentized_field(Sample(x=x, y=y + 5.5), set_, sig).T
    assert T_shift == T0
    # scale by a power of two: exact in binary floating point
    T_pow2 = studentized_field(Sample(x=x, y=4.0 * y), set_, 4.0 * sig).T
    assert T_pow2 == T0
    # generic positive scale: equal up to roundoff
    T_gen = studentized_field(Sample(x=x, y=0.3 * y), set_, 0.3 * sig).T
    np.testing.assert_allclose(T_gen, T0, rtol=1e-12)


def test_variance_hat_accepts_signed_sigma():
    w = np.array([1.0, -2.0, 0.5])
    assert variance_hat(w, [1.0, -1.0, 2.0]) == variance_hat(w, [1.0, 1.0, 2.0])
    with pytest.raises(ValueError):
        variance_hat(w, [1.0, 1.0])


def test_empty_window_scale_is_inactive():
    rng = np.random.default_rng(41)
    x = rng.uniform(0, 1, 30)
    sample = Sample(x=x, y=rng.normal(size=30))
    set_ = ScaleSet(scales=(Scale(0.5, 0.4), Scale(25.0, 0.1)))
    field = studentized_field(sample, set_, np.ones(30))
    np.testing.assert_array_equal(field.active_ids, [0])
    assert np.isnan(field.t[1])
    assert field.v_hat[1] == 0.0
    assert np.isfinite(field.T)


def test_all_scales_degenerate_raises():
    sample = Sample(x=[0.0, 1.0, 2.0], y=[0.0, 1.0, 2.0])
    set_ = ScaleSet(scales=(Scale(50.0, 0.1), Scale(-50.0, 0.1)))
    with pytest.raises(DegenerateVarianceError):
        studentized_field(sample, set_, np.ones(3))


def test_a_matrix_reproduces_t():
    rng = np.random.default_rng(43)
    x = rng.uniform(0, 1, 40)
    y = rng.normal(size=40)
    set_ = build_custom_set([0.3, 0.5, 0.7], [0.4, 0.2])
    field = studentized_field(Sample(x=x, y=y), set_, np.ones(40))
    # rows of a_matrix are w / sqrt(v): acting on y recovers the t values
    np.testing.assert_allclose(
        field.a_matrix @ y, field.t[field.active_ids], rtol=0, atol=1e-10
    )


def test_scale_weights_multiply_t_but_not_A_n():
    rng = np.random.default_rng(47)
    x = rng.uniform(0, 1, 40)
    y = rng.normal(size=40)
    scales = tuple(Scale(c, 0.4) for c in (0.3, 0.7))
    plain = studentized_field(Sample(x=x, y=y), ScaleSet(scales=scales), np.ones(40))
    weighted = studentized_field(
        Sample(x=x, y=y),
        ScaleSet(scales=scales, scale_weights=(2.0, 0.5)),
        np.ones(40),
    )
    np.testing.assert_allclose(
        weighted.t[weighted.active_ids],
        plain.t[plain.active_ids] * np.array([2.0, 0.5]),
        rtol=1e-14,
    )
    assert weighted.A_n == plain.A_n


def test_sensitivity_matches_field():
    rng = np.random.default_rng(53)
    x = rng.uniform(0, 1, 50)
    sample = Sample(x=x, y=rng.normal(size=50))
    set_ = build_custom_set([0.25, 0.75], [0.5])
    field = studentized_field(sample, set_, np.ones(50))
    assert sensitivity_A(sample, set_, np.ones(50)) == field.A_n
    assert 0.0 < field.A_n < 1.0


def _naive_z_field(sample, s, x_kernel, z_kernel):
    # direct double sum with the product weighting in z
    x, y, z = sample.x, sample.y, sample.z
    kx = np.asarray(x_kernel((x - s.x) / s.h), dtype=float)
    kz = np.ones_like(kx)
    for j in range(z.shape[1]):
        kz = kz * np.asarray(z_kernel((z[:, j] - s.z_loc[j]) / s.z_bw), dtype=float)
    g = kx * kz
    total = 0.0
    for i in range(x.size):
        diff = x - x[i]
        total += g[i] * np.sum((y[i] - y) * np.sign(diff) * np.abs(diff) ** s.k * g)
    return 0.5 * total


def test_z_cell_field_matches_naive():
    rng = np.random.default_rng(61)
    n = 50
    sample = Sample(
        x=rng.uniform(0, 1, n),
        y=rng.normal(size=n),
        z=rng.uniform(0, 1, (n, 2)),
    )
    base = build_custom_set([0.4, 0.6], [0.5])
    set_ = build_z_local_set(base, z_locs=[(0.3, 0.7), (0.6, 0.4)], z_bws=[0.5])
    field = multivariate_field(sample, set_, np.ones(n))
    for r, s in enumerate(set_.scales):
        b_naive = _naive_z_field(sample, s, set_.kernel, set_.z_kernel)
        np.testing.assert_allclose(field.b[r], b_naive, rtol=0, atol=1e-12)


def test_z_cell_validation():
    rng = np.random.default_rng(67)
    base = build_custom_set([0.5], [0.5])
    zset = build_z_local_set(base, z_locs=[(0.5,)], z_bws=[0.5])
    no_z = Sample(x=rng.uniform(0, 1, 10), y=rng.normal(size=10))
    with pytest.raises(DataError):
        multivariate_field(no_z, zset, np.ones(10))
    with_z = Sample(x=no_z.x, y=no_z.y, z=rng.uniform(0, 1, (10, 2)))
    with pytest.raises(DataError):
        multivariate_field(with_z, zset, np.ones(10))  # z_loc is 1-d, z is 2-d
    with pytest.raises(ValueError):
        studentized_field(with_z, zset, np.ones(10))


def test_evaluate_field_dispatch():
    rng = np.random.default_rng(71)
    n = 30
    sample = Sample(
        x=rng.uniform(0, 1, n), y=rng.normal(size=n), z=rng.uniform(0, 1, (n, 1))
    )
    plain = build_custom_set([0.5], [0.5])
    zset = build_z_local_set(plain, z_locs=[(0.5,)], z_bws=[1.0])
    assert evaluate_field(sample, plain, np.ones(n)).T == studentized_field(
        sample, plain, np.ones(n)
    ).T
    assert evaluate_field(sample, zset, np.ones(n)).T == multivariate_field(
        sample, zset, np.ones(n)
    ).T


def test_sample_validation():
    with pytest.raises(DataError):
        Sample(x=[1.0], y=[1.0])
    with pytest.raises(DataError):
        Sample(x=[1.0, 2.0], y=[1.0])
    with pytest.raises(DataError):
        Sample(x=[1.0, np.nan], y=[1.0, 2.0])
    with pytest.raises(DataError):
        Sample(x=[1.0, 2.0], y=[1.0, 2.0], z=np.ones((3, 1)))
    s = Sample(x=[3.0, 1.0, 2.0], y=[1.0, 2.0, 3.0])
    assert not s.sorted_by_x
    assert Sample(x=[1.0, 2.0, 2.0], y=[0.0, 0.0, 0.0]).sorted_by_x


def test_sigma_length_mismatch():
    with pytest.raises(DataError):
        studentized_field(TWO_POINT, ScaleSet(scales=(MID_SCALE,)), [1.0, 1.0, 1.0])
