import datetime as dt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hilbertpca import ingest
from conftest import make_panel

WINDOW = (dt.date(2013, 4, 1), dt.date(2013, 4, 10))


def test_load_all_rows_inside_window(write_events):
    path = write_events([
        "c1,A1,A1-350,Q,2013-04-01,350",
        "c1,A1,A1-350,P,2013-04-01,0.3",
        "c2,A1,A1-500,TVAd,2013-04-03,15",
    ])
    raw = ingest.load_events(path, window=WINDOW)
    assert len(raw) == 3
    assert raw.dropped_count == 0


def test_row_after_window_is_dropped(write_events):
    raw = ingest.load_events(write_events(["c1,A1,s,Q,2013-04-11,350"]), window=WINDOW)
    assert len(raw) == 0
    assert raw.dropped_count == 1


@pytest.mark.parametrize("row, line", [
    ("c1,A1,s,Q,2013-04-02,-5", 3),
    ("c1,A1,s,Q,2013-02-30,5", 3),
    ("c1,A1,s,Coupon,2013-04-02,5", 3),
    ("c1,A1,s,P,2013-04-02,0", 3),
])
def test_malformed_row_reports_line(write_events, row, line):
    path = write_events(["c1,A1,s,Q,2013-04-01,350", row])
    with pytest.raises(ingest.ParseError) as err:
        ingest.load_events(path, window=WINDOW)
    assert err.value.line == line


def test_custom_schema_and_delimiter(write_events):
    header = "cust;prod;item;kind;day;amount\n"
    path = write_events(["c1;A1;s;Q;2013-04-01;350"], header=header)
    schema = {"customer": "cust", "product": "prod", "sku": "item",
              "variable": "kind", "date": "day", "value": "amount"}
    raw = ingest.load_events(path, schema, WINDOW, delimiter=";")
    assert raw.frame["value"].tolist() == [350.0]


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        ingest.load_events("/nonexistent/events.csv")


def _raw(rows):
    import pandas as pd
    frame = pd.DataFrame(rows, columns=["customer_id", "product_code", "sku_code",
                                        "variable", "date", "value"])
    frame["date"] = pd.to_datetime(frame["date"])
    return ingest.RawEventTable(frame, 0, WINDOW)


def test_quantity_summed_over_skus():
    raw = _raw([("c1", "A1", "A1-a", "Q", "2013-04-02", 100.0),
                ("c2", "A1", "A1-b", "Q", "2013-04-02", 200.0)])
    panel = ingest.aggregate(raw, WINDOW)
    q = panel.values[panel.labels.index(("A1", "Q"))]
    assert q[1] == 300.0
    assert panel.T == 10
    assert len(panel.labels) == 5


def test_price_is_quantity_weighted():
    raw = _raw([("c1", "A1", "s1", "Q", "2013-04-02", 350.0),
                ("c1", "A1", "s1", "P", "2013-04-02", 0.30),
                ("c2", "A1", "s2", "Q", "2013-04-02", 350.0),
                ("c2", "A1", "s2", "P", "2013-04-02", 0.50)])
    panel = ingest.aggregate(raw, WINDOW)
    p = panel.values[panel.labels.index(("A1", "P"))]
    assert p[1] == pytest.approx(0.40, abs=1e-12)


def test_price_gaps_filled_forward_and_back():
    raw = _raw([("c1", "A1", "s", "Q", "2013-04-03", 1.0),
                ("c1", "A1", "s", "P", "2013-04-03", 0.3),
                ("c1", "A1", "s", "Q", "2013-04-06", 1.0),
                ("c1", "A1", "s", "P", "2013-04-06", 0.5)])
    panel = ingest.aggregate(raw, WINDOW)
    i = panel.labels.index(("A1", "P"))
    np.testing.assert_array_equal(panel.values[i], [0.3] * 5 + [0.5] * 5)
    assert panel.entry_days[i] == 2


def test_empty_window_errors():
    raw = _raw([("c1", "A1", "s", "Q", "2014-01-01", 1.0)])
    with pytest.raises(ValueError, match="no data in window"):
        ingest.aggregate(raw, WINDOW)


def test_products_ordered_by_total_quantity():
    raw = _raw([("c1", "B1", "s", "Q", "2013-04-02", 5.0),
                ("c1", "A1", "s", "Q", "2013-04-02", 1.0)])
    panel = ingest.aggregate(raw, WINDOW)
    assert panel.labels[0] == ("B1", "P")


@settings(max_examples=25, deadline=None)
@given(st.randoms(use_true_random=False))
def test_aggregate_invariant_to_row_order(rand):
    rows = [(f"c{i % 3}", "A1" if i % 2 else "B1", f"s{i % 4}", v, f"2013-04-0{1 + i % 9}", float(i + 1))
            for i, v in enumerate(["Q", "TVAd", "Search", "Visit"] * 5)]
    shuffled = rows[:]
    rand.shuffle(shuffled)
    a = ingest.aggregate(_raw(rows), WINDOW)
    b = ingest.aggregate(_raw(shuffled), WINDOW)
    assert a.labels == b.labels
    np.testing.assert_allclose(a.values, b.values, rtol=0, atol=1e-12)


def test_aggregate_linear_over_customers():
    rows = [("c1", "A1", "s", "Q", "2013-04-02", 3.0), ("c2", "A1", "s", "Q", "2013-04-02", 4.0),
            ("c2", "A1", "s", "Q", "2013-04-05", 1.0), ("c1", "A1", "s", "TVAd", "2013-04-05", 15.0)]
    total = ingest.aggregate(_raw(rows), WINDOW).values
    parts = sum(ingest.aggregate(_raw([r for r in rows if r[0] == c]), WINDOW).values
                for c in ("c1", "c2"))
    np.testing.assert_allclose(total, parts)


def test_filter_sparse():
    panel = make_panel(np.ones((3, 10)), [("A1", "Q"), ("A1", "TVAd"), ("A1", "Search")])
    counts = {("A1", "Q"): 10, ("A1", "TVAd"): 4, ("A1", "Search"): 0}
    kept = ingest.filter_sparse(panel, counts, 4)
    assert kept.labels == [("A1", "Q"), ("A1", "TVAd")]
    assert ingest.filter_sparse(kept, counts, 4).labels == kept.labels
    assert ingest.filter_sparse(panel, counts, 1).labels == kept.labels
    with pytest.raises(ValueError, match="empty panel"):
        ingest.filter_sparse(panel, counts, 11)
    with pytest.raises(ValueError):
        ingest.filter_sparse(panel, counts, 0)


def test_standardize_small_cases():
    np.testing.assert_allclose(ingest.standardize(make_panel([[1.0, 3.0]])).values, [[-1.0, 1.0]])
    with pytest.raises(ValueError, match="S0"):
        ingest.standardize(make_panel([[5.0, 5.0, 5.0]]))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=40).filter(lambda v: np.ptp(v) > 1e-3))
def test_standardize_moments_and_idempotence(values):
    z = ingest.standardize(make_panel([values]))
    assert abs(z.values.mean()) < 1e-10
    assert abs(z.values.std() - 1) < 1e-10
    np.testing.assert_allclose(ingest.standardize(z).values, z.values, atol=1e-12)


def test_ranksize_exact_power_law():
    r = np.arange(1, 19)
    totals = 1e7 * r ** (-1 / 1.109)
    slope, r2 = ingest.ranksize_fit(totals)
    assert slope == pytest.approx(-1.109, abs=1e-6)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_ranksize_table_totals_against_linregress():
    # Top-18 product totals of a real panel; the fit over these alone gives -1.236.
    totals = [1.00e7, 7.52e6, 7.32e6, 6.59e6, 4.09e6, 3.99e6, 3.47e6, 3.08e6, 2.94e6,
              2.27e6, 2.03e6, 1.82e6, 1.80e6, 1.76e6, 1.70e6, 1.53e6, 1.46e6, 1.42e6]
    slope, r2 = ingest.ranksize_fit(totals)
    ref = stats.linregress(np.log(totals), np.log(np.arange(1, 19)))
    assert slope == pytest.approx(ref.slope, abs=1e-12)
    assert r2 == pytest.approx(ref.rvalue ** 2, abs=1e-12)
    assert slope == pytest.approx(-1.2356, abs=1e-3)


def test_ranksize_cutoff_and_degenerate():
    with pytest.raises(ValueError):
        ingest.ranksize_fit([5.0, 5.0, 5.0, 5.0])
    with pytest.raises(ValueError):
        ingest.ranksize_fit([10.0, 9.0, 1.0, 0.5], cutoff=5.0)
