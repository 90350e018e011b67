"""
Which eigenmodes are real?
==========================

Rotating every series by its own random offset keeps its autocorrelation
and destroys cross-correlation.  Eigenvalues above mean + 2 sd of the
rotated spectra are significant; a pure-noise series appended to the panel
gives the noise level of eigenvector components.
"""
import numpy as np

from hilbertpca import chpca, hilbert, ingest, significance, synth

res = synth.generate(synth.single_factor_spec(n_series=20, n_loaded=8, seed=0))
cp = hilbert.complexify(ingest.standardize(res.panel))

rrs = significance.rrs_test(cp, n_sims=1000, seed=0, threads=4)
print(rrs.table().head(4).to_string(index=False))

band = significance.component_bands(cp, [0], n_trials=100, seed=1)
mags = np.abs(chpca.eigendecompose(chpca.correlation(cp)).eigenvectors[:, 0])
print("band:", round(band.threshold(0), 3))
print("loaded series above band:", int((mags[:8] > band.threshold(0)).sum()), "of 8")
print("noise series above band: ", int((mags[8:] > band.threshold(0)).sum()), "of 12")
