"""
Customers in the space of eigenmodes
====================================

Each customer's own series are complexified and projected on the aggregate
eigenmodes; the mean squared projection is the customer's coordinate, which
is then regressed on the profile table.
"""
import datetime as dt

from hilbertpca import chpca, customer, hilbert, ingest, synth

res = synth.generate(synth.chain_spec(n_products=3, seed=0))
panel = ingest.standardize(res.panel)
cp = hilbert.complexify(panel)
sys = chpca.eigendecompose(chpca.correlation(cp), cp)

events, profiles = synth.generate_customers(panel, n_customers=300, seed=0)
events["date"] = events["date"].astype("datetime64[ns]")
window = (dt.date(2013, 4, 1), dt.date(2014, 3, 31))
raw = ingest.RawEventTable(events, 0, window)

signals = customer.customer_complexify(customer.customer_panel(raw, panel.labels, window))
space = customer.project(signals, sys, [0, 1])
print(space.table().describe().round(3))

table = customer.ProfileTable(profiles)
fit = customer.regress(space, table, customer.total_quantity_spec(), mode=0, name="X1.1")
print(customer.regression_table([fit]).round(4).to_string(index=False))
