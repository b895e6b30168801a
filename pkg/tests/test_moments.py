import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from energyhet.moments import (
    MomentSummary,
    as_dataset,
    derived_moments,
    merge,
    read_csv,
    summarize,
    summarize_chunks,
)
from energyhet.synth import exponential, normal, sample

from conftest import two_pass


def test_two_point_symmetric():
    s = summarize([[0.0], [1.0]])
    m = derived_moments(s, 0)
    assert s.n == 2
    assert m.mean == 0.5
    assert m.variance == 0.25
    assert m.skewness == 0.0
    assert m.kurtosis == pytest.approx(-2.0, abs=1e-15)
    assert not m.degenerate


def test_constant_column_is_degenerate():
    s = summarize(np.full((10, 1), 5.0))
    assert s.mean[0] == 5.0
    np.testing.assert_array_equal(s.sums, 0.0)
    m = derived_moments(s)
    assert m.degenerate
    assert (m.skewness, m.kurtosis) == (0.0, 0.0)


@pytest.mark.parametrize("order", [4, 6])
def test_matches_two_pass(rng, order):
    x = rng.gamma(2.0, 3.0, size=(5000, 3)) + 40.0
    s = summarize(x, order, chunk_rows=777)
    ref = two_pass(x)
    np.testing.assert_allclose(s.mean, ref["mean"], rtol=1e-12)
    for k in range(2, order + 1):
        np.testing.assert_allclose(s.central_sum(k), ref["sums"][k - 2], rtol=1e-9)
    mean, var, skew, kurt, _ = s.moment_arrays()
    np.testing.assert_allclose(var, ref["var"], rtol=1e-9)
    np.testing.assert_allclose(skew, ref["skew"], rtol=1e-9)
    np.testing.assert_allclose(kurt, ref["kurt"], rtol=1e-9)


def test_exponential_shape_moments():
    # large-sample estimates of the Exp(1) skewness 2 and excess kurtosis 6
    s = summarize(sample(exponential(1.0), 10**6, seed=11))
    m = derived_moments(s)
    assert abs(m.skewness - 2.0) < 0.05
    assert abs(m.kurtosis - 6.0) < 0.5


def test_normal_cumulants_vanish():
    s = summarize(sample(normal(0, 1), 10**6, seed=3), order=6)
    m = derived_moments(s)
    assert abs(m.skewness) < 0.01
    assert abs(m.kurtosis) < 0.03
    assert abs(m.kappa6) < 0.5  # sd of the kappa6 estimate is about sqrt(720 / n) * ... ~ 0.03 * 10


def test_kappa6_of_shifted_exponential():
    # cumulants of Exp(1) are (r - 1)!, so kappa6 = 120
    s = summarize(sample(exponential(1.0), 2 * 10**6, seed=5) + 7.0, order=6)
    assert derived_moments(s).kappa6 == pytest.approx(120.0, rel=0.15)


def test_kappa6_requires_order_six():
    with pytest.raises(ValueError, match="order-6"):
        summarize([[1.0], [2.0], [4.0]]).kappa6()
    assert derived_moments(summarize([[1.0], [2.0], [4.0]])).kappa6 is None


def test_errors():
    with pytest.raises(ValueError, match="empty input"):
        summarize(np.empty((0, 2)))
    x = np.ones((4, 3))
    x[2, 1] = np.nan
    with pytest.raises(ValueError, match=r"non-finite value at \(2, 1\)"):
        summarize(x)
    with pytest.raises(ValueError, match="order"):
        summarize(np.ones((3, 1)), order=5)
    with pytest.raises(ValueError, match="insufficient samples for variance"):
        derived_moments(summarize([[3.0]]))


def test_non_finite_location_across_chunks():
    x = np.zeros((10, 2))
    x[7, 0] = np.inf
    with pytest.raises(ValueError, match=r"\(7, 0\)"):
        summarize(x, chunk_rows=3)


def test_single_row_has_zero_sums():
    s = summarize([[1.5, -2.0]])
    assert s.n == 1
    np.testing.assert_array_equal(s.sums, 0.0)


# -- merge ------------------------------------------------------------------


def test_merge_identity():
    s = summarize(np.arange(12.0).reshape(4, 3))
    assert merge(s, MomentSummary.empty(3)) is s
    assert merge(MomentSummary.empty(3), s) is s


@pytest.mark.parametrize("order", [4, 6])
def test_merge_any_split(rng, order):
    x = rng.standard_t(6, size=(300, 2)) * 4.0 + 100.0
    whole = two_pass(x)
    for k in (1, 2, 50, 150, 299):
        s = merge(summarize(x[:k], order), summarize(x[k:], order))
        np.testing.assert_allclose(s.mean, whole["mean"], rtol=1e-12)
        for p in range(2, order + 1):
            np.testing.assert_allclose(s.central_sum(p), whole["sums"][p - 2], rtol=1e-9)


def test_merge_commutes(rng):
    a = summarize(rng.normal(0, 1, (40, 3)))
    b = summarize(rng.exponential(2, (70, 3)))
    ab, ba = merge(a, b).moment_arrays(), merge(b, a).moment_arrays()
    for u, v in zip(ab[:4], ba[:4]):
        np.testing.assert_allclose(u, v, rtol=1e-12)


def test_merge_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        merge(MomentSummary.empty(2), MomentSummary.empty(3))
    with pytest.raises(ValueError, match="order mismatch"):
        merge(MomentSummary.empty(2, 4), MomentSummary.empty(2, 6))


def test_merge_of_constants_stays_nonnegative():
    a = summarize(np.full((5, 1), 0.1))
    b = summarize(np.full((9, 1), 0.1))
    s = merge(a, b)
    assert (s.s2 >= 0).all() and (s.s4 >= 0).all()
    assert derived_moments(s).degenerate


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(1, 3)),
           elements=st.floats(-1e3, 1e3, allow_nan=False)),
    st.data(),
)
def test_merge_fuzz(x, data):
    k = data.draw(st.integers(1, x.shape[0] - 1))
    s = merge(summarize(x[:k], 6), summarize(x[k:], 6))
    ref = summarize(x, 6)
    scale = np.abs(x).max() + 1.0
    np.testing.assert_allclose(s.mean, ref.mean, rtol=1e-9, atol=1e-12 * scale)
    for p in range(2, 7):
        np.testing.assert_allclose(
            s.central_sum(p), ref.central_sum(p), rtol=1e-9, atol=1e-9 * x.shape[0] * scale**p
        )


# -- single pass ------------------------------------------------------------


class CountingSource:
    """Yields row chunks and counts how many times each row is handed out."""

    def __init__(self, x, chunk):
        self.x, self.chunk = x, chunk
        self.reads = np.zeros(x.shape[0], dtype=int)

    def __iter__(self):
        for i in range(0, self.x.shape[0], self.chunk):
            self.reads[i:i + self.chunk] += 1
            yield self.x[i:i + self.chunk]


def test_single_pass(rng):
    x = rng.normal(3, 2, (1003, 4))
    src = CountingSource(x, 100)
    s = summarize_chunks(src, 6)
    np.testing.assert_array_equal(src.reads, 1)
    assert s.allclose(summarize(x, 6))


def test_single_pass_accepts_generator():
    gen = (np.full((2, 1), float(i)) for i in range(5))
    s = summarize_chunks(gen)
    assert s.n == 10 and s.mean[0] == 2.0


# -- invariance properties --------------------------------------------------


finite = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 30), st.integers(1, 3)), elements=finite),
       st.floats(-1e3, 1e3))
def test_translation(x, c):
    a, b = summarize(x, 6), summarize(x + c, 6)
    spread = np.ptp(x, axis=0) + 1.0
    assert np.all(np.abs(b.mean - (a.mean + c)) <= 1e-9 * (np.abs(a.mean + c) + spread))
    for k in range(2, 7):
        # round-off from the shift enters at the scale of |c| relative to the spread
        tol = 1e-9 * np.abs(a.central_sum(k)) + 1e-12 * x.shape[0] * (spread + abs(c)) ** k
        assert np.all(np.abs(b.central_sum(k) - a.central_sum(k)) <= tol)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 30), st.just(2)), elements=finite),
       st.floats(1e-3, 1e3))
def test_scaling(x, c):
    a = summarize(x)
    if a.moment_arrays()[4].any() or (np.ptp(x, axis=0) < 1e-6 * (np.abs(x).max(axis=0) + 1)).any():
        return
    b = summarize(x * c)
    ma, mb = a.moment_arrays(), b.moment_arrays()
    np.testing.assert_allclose(np.sqrt(mb[1]), c * np.sqrt(ma[1]), rtol=1e-9)
    np.testing.assert_allclose(mb[2], ma[2], rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(mb[3], ma[3], rtol=1e-9, atol=1e-9)


# -- serialization ----------------------------------------------------------


@pytest.mark.parametrize("order", [4, 6])
def test_json_round_trip_is_exact(rng, order):
    s = summarize(rng.normal(size=(50, 3)) / 3.0, order)
    back = MomentSummary.from_json(s.to_json())
    assert back.n == s.n and back.order == order
    np.testing.assert_array_equal(back.mean, s.mean)
    np.testing.assert_array_equal(back.sums, s.sums)
    keys = set(json.loads(s.to_json()))
    assert keys == {"n", "d", "order", "mean"} | {f"s{k}" for k in range(2, order + 1)}


@pytest.mark.parametrize("patch, message", [
    ({"s2": [-1.0]}, "non-negative"),
    ({"mean": [0.0, 1.0]}, "length d"),
    ({"order": 5}, "unsupported order"),
    ({"s3": [float("nan")]}, "non-finite"),
])
def test_from_dict_rejects(patch, message):
    obj = summarize([[0.0], [1.0], [3.0]]).to_dict()
    obj.update(patch)
    with pytest.raises(ValueError, match=message):
        MomentSummary.from_dict(obj)


def test_from_dict_missing_field():
    obj = summarize([[0.0], [1.0]]).to_dict()
    del obj["s4"]
    with pytest.raises(ValueError, match="malformed"):
        MomentSummary.from_dict(obj)


def test_summary_is_immutable():
    s = summarize([[0.0], [1.0]])
    with pytest.raises(ValueError):
        s.mean[0] = 3.0


def test_from_moments_round_trip():
    s = MomentSummary.from_moments(100, [1.0, -2.0], [4.0, 0.25], [0.5, 0.0], [1.0, -1.2])
    mean, var, skew, kurt, _ = s.moment_arrays()
    np.testing.assert_allclose(var, [4.0, 0.25])
    np.testing.assert_allclose(skew, [0.5, 0.0], atol=1e-15)
    np.testing.assert_allclose(kurt, [1.0, -1.2])


# -- csv --------------------------------------------------------------------


def test_read_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,2\n3,4.5\n", encoding="utf-8")
    np.testing.assert_array_equal(read_csv(p), [[1, 2], [3, 4.5]])


def test_read_csv_worked_example(tmp_path):
    # hand computation: column a = 1,2,3,4 has mean 2.5, S2 = 5, S3 = 0, S4 = 10.25;
    # column b = 0,0,0,8 has mean 2, S2 = 48, S3 = 192, S4 = 1344
    p = tmp_path / "d.csv"
    p.write_text("a,b\n1,0\n2,0\n3,0\n4,8\n", encoding="utf-8")
    s = summarize(read_csv(p))
    np.testing.assert_allclose(s.mean, [2.5, 2.0])
    np.testing.assert_allclose(s.s2, [5.0, 48.0])
    np.testing.assert_allclose(s.s3, [0.0, 192.0], atol=1e-12)
    np.testing.assert_allclose(s.s4, [10.25, 1344.0])


@pytest.mark.parametrize("body, message", [
    ("a,b\n1,2\n3,x\n", r"malformed cell at \(row 1, col 1\)"),
    ("a,b\n1,2\n3\n", "row 1 has 1 cells"),
    ("a,b\n", "empty input"),
    ("", "empty input"),
    ("a\n1\nnan\n", r"non-finite value at \(1, 0\)"),
])
def test_read_csv_errors(tmp_path, body, message):
    p = tmp_path / "bad.csv"
    p.write_text(body, encoding="utf-8")
    with pytest.raises(ValueError, match=message):
        read_csv(p)


def test_as_dataset_vector_is_column():
    assert as_dataset([1.0, 2.0, 3.0]).shape == (3, 1)
