"""
Synchronization network and Hodge potentials
============================================

Comoving pairs with a correlation above the connecting threshold become
edges from leader to follower.  The Hodge potential orders the series:
the higher, the further upstream.
"""
from hilbertpca import chpca, hilbert, hodge, ingest, synth

res = synth.generate(synth.chain_spec(n_products=6, lead_days=2, noise_sd=0.3, seed=0))
panel = ingest.standardize(res.panel)
C = chpca.correlation(hilbert.complexify(panel))

rho, theta = hodge.polar(C)
rho_star = hodge.select_threshold(rho, theta)
net = hodge.build_network(rho, theta, rho_star, panel.labels)
result = hodge.hodge_decompose(net)
print(f"rho_star={rho_star:.3f}, {int(net.active.sum())} nodes, {len(net.edges)} edges")

report = hodge.potential_report(net, result, scale_days_per_unit=1.55)
print(report.pivot(index="product", columns="variable", values="potential").round(2))
