import math
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hiddencorr.ingestion import (
    ReturnsPanel, WindowSpec, build_cov_tensor, log_returns, monthly_windows, read_panel_csv,
    window_cov,
)
from hiddencorr.io import ParseError


def test_log_return_of_doubling():
    p = log_returns([[1.0, 5.0], [2.0, 5.0]])
    assert p.values[0, 0] == pytest.approx(math.log(2))
    assert p.values[0, 1] == 0.0
    assert p.shape == (1, 2)


def test_log_returns_inverse_of_cumulative_sum(rng):
    r = rng.normal(0, 0.02, (50, 3))
    prices = 100 * np.exp(np.vstack([np.zeros(3), np.cumsum(r, axis=0)]))
    np.testing.assert_allclose(log_returns(prices).values, r, atol=1e-12)


def test_log_returns_rejects_nonpositive():
    with pytest.raises(ValueError, match="row 2, ticker B"):
        log_returns([[1.0, 1.0], [1.0, 0.0]], tickers=["A", "B"])


def test_window_cov_pairwise_oracle(rng):
    x = rng.standard_normal((30, 4))
    panel = ReturnsPanel(list("abcd"), range(30), x)
    c = window_cov(panel, range(5, 25))
    w = x[5:25]
    for i in range(4):
        for j in range(4):
            oracle = sum((w[t, i] - w[:, i].mean()) * (w[t, j] - w[:, j].mean()) for t in range(20)) / 19
            assert c[i, j] == pytest.approx(oracle, rel=1e-12, abs=1e-15)


def test_fixed_windows_count(rng):
    panel = ReturnsPanel(list("ab"), range(300), rng.standard_normal((300, 2)))
    t = build_cov_tensor(panel, WindowSpec(100))
    assert t.shape == (2, 2, 3)
    with pytest.warns(RuntimeWarning, match="dropping 50"):
        assert build_cov_tensor(panel, WindowSpec(50, 100)).shape[2] == 3


def test_trailing_rows_warning(rng):
    panel = ReturnsPanel(list("ab"), range(250), rng.standard_normal((250, 2)))
    with pytest.warns(RuntimeWarning, match="dropping 50 trailing"):
        t = build_cov_tensor(panel, WindowSpec(100))
    assert t.shape[2] == 2


@given(st.integers(0, 10 ** 6))
def test_permutation_equivariance(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((40, 5))
    perm = rng.permutation(5)
    spec = WindowSpec(10)
    t = build_cov_tensor(ReturnsPanel(list("abcde"), range(40), x), spec)
    tp = build_cov_tensor(ReturnsPanel(list("abcde"), range(40), x[:, perm]), spec)
    np.testing.assert_allclose(tp, t[np.ix_(perm, perm, range(t.shape[2]))], atol=1e-14)


def test_large_window_converges_to_true_covariance():
    rng = np.random.default_rng(4)
    sigma = np.array([[1.0, 0.5], [0.5, 2.0]])
    x = rng.multivariate_normal([0, 0], sigma, size=200_000)
    t = build_cov_tensor(ReturnsPanel(["a", "b"], range(x.shape[0]), x), WindowSpec(x.shape[0]))
    np.testing.assert_allclose(t[:, :, 0], sigma, atol=0.02)


def test_monthly_windows():
    days = [date(2020, 1, 1) + timedelta(days=i) for i in range(0, 100, 3)]
    ranges = monthly_windows(days)
    months = [(days[r.start].year, days[r.start].month) for r in ranges]
    assert months == [(2020, 1), (2020, 2), (2020, 3), (2020, 4)]
    assert sum(len(r) for r in ranges) == len(days)


def test_panel_validation():
    with pytest.raises(ValueError, match="strictly increasing"):
        ReturnsPanel(["a"], [1, 1], np.zeros((2, 1)))
    with pytest.raises(ValueError, match="row 2"):
        ReturnsPanel(["a"], [1, 2], np.array([[0.0], [np.nan]]))
    with pytest.raises(ValueError):
        WindowSpec(1)


def test_read_panel_csv(tmp_path):
    f = tmp_path / "prices.csv"
    f.write_text("date,AAA,BBB\n2021-01-04,10,20\n2021-01-05,20,20\n2021-01-06,10,40\n")
    panel = read_panel_csv(f)
    assert panel.tickers == ("AAA", "BBB")
    assert panel.timestamps[0] == date(2021, 1, 5)
    np.testing.assert_allclose(panel.values, [[math.log(2), 0], [-math.log(2), math.log(2)]])
    r = read_panel_csv(f, kind="returns")
    assert r.shape == (3, 2)


@pytest.mark.parametrize("body,line,msg", [
    ("date,A\n2021-01-04,1\n2021-01-05,\n", 3, "missing value"),
    ("date,A\n2021-01-04,1\nnot-a-date,2\n", 3, "bad timestamp"),
    ("date,A\n2021-01-04,1,2\n", 2, "expected 2 fields"),
    ("date,A\n2021-01-04,abc\n", 2, "not a number"),
])
def test_read_panel_csv_errors(tmp_path, body, line, msg):
    f = tmp_path / "bad.csv"
    f.write_text(body)
    with pytest.raises(ParseError, match=msg) as err:
        read_panel_csv(f)
    assert err.value.line == line


def test_read_panel_csv_nonpositive_price(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("date,A\n2021-01-04,1\n2021-01-05,-1\n")
    with pytest.raises(ParseError, match="ticker A"):
        read_panel_csv(f)


def test_constant_prices_and_identical_columns(rng):
    assert np.all(log_returns(np.full((5, 3), 7.0)).values == 0)
    col = rng.standard_normal(20)
    panel = ReturnsPanel(["a", "b"], range(20), np.column_stack([col, col]))
    c = window_cov(panel, range(20))
    assert np.ptp(c) == 0
    x = rng.standard_normal((50, 5))
    c = window_cov(ReturnsPanel(list("abcde"), range(50), x), range(50))
    np.testing.assert_allclose(np.diag(c), x.var(axis=0, ddof=1), rtol=1e-12)


def test_single_window_and_slice_properties(rng):
    x = rng.standard_normal((40, 4))
    panel = ReturnsPanel(list("abcd"), range(40), x)
    t = build_cov_tensor(panel, WindowSpec(40))
    assert t.shape == (4, 4, 1)
    np.testing.assert_array_equal(t[:, :, 0], window_cov(panel, range(40)))
    t = build_cov_tensor(panel, WindowSpec(5))
    for k in range(t.shape[2]):
        np.testing.assert_array_equal(t[:, :, k], t[:, :, k].T)
        assert np.linalg.eigvalsh(t[:, :, k]).min() >= -1e-10


def test_mean_slice_converges_within_monte_carlo_error():
    rng = np.random.default_rng(8)
    sigma = np.array([[1.0, 0.3, -0.2], [0.3, 2.0, 0.5], [-0.2, 0.5, 1.5]])
    n, k = 20, 500
    x = rng.multivariate_normal(np.zeros(3), sigma, size=n * k)
    t = build_cov_tensor(ReturnsPanel(list("abc"), range(n * k), x), WindowSpec(n))
    err = np.linalg.norm(t.mean(axis=2) - sigma)
    # Gaussian sample covariance: var(s_ij) = (sigma_ij^2 + sigma_ii sigma_jj) / (n - 1)
    var = (sigma ** 2 + np.outer(np.diag(sigma), np.diag(sigma))) / (n - 1) / k
    assert err <= 3 * np.sqrt(var.sum())
