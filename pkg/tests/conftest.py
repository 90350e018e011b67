import numpy as np
import pytest

from hilbertpca import hilbert, ingest, synth


def days(T, start="2013-04-01"):
    return np.arange(np.datetime64(start, "D"), np.datetime64(start, "D") + T)


def make_panel(x, labels=None):
    x = np.atleast_2d(np.asarray(x, float))
    if labels is None:
        labels = [(f"S{i}", "Q") for i in range(x.shape[0])]
    return ingest.PanelSeries(labels, x, days(x.shape[1]))


@pytest.fixture
def noise_panel():
    rng = np.random.default_rng(7)
    return ingest.standardize(make_panel(rng.standard_normal((10, 365))))


@pytest.fixture
def planted():
    """Planted single-factor panel: 8 loaded series out of 20."""
    res = synth.generate(synth.single_factor_spec(seed=0))
    return hilbert.complexify(ingest.standardize(res.panel))


EVENT_HEADER = "customer_id,product_code,sku_code,variable,date,value\n"


@pytest.fixture
def write_events(tmp_path):
    def write(rows, name="events.csv", header=EVENT_HEADER):
        path = tmp_path / name
        path.write_text(header + "".join(r + "\n" for r in rows))
        return path
    return write


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda l: int(l.split()[2])):
            terminalreporter.write_line(line)
