"""
Clockwise complexification
==========================

A cosine becomes a phasor turning clockwise, and a delayed copy of a series
shows up as a positive phase of the follower against the leader.
"""
import numpy as np

from hilbertpca import chpca, hilbert

T, k = 64, 3
t = np.arange(T)
z = hilbert.clockwise_analytic(np.cos(2 * np.pi * k * t / T))
print("max |z - exp(-iwt)|:", np.abs(z - np.exp(-2j * np.pi * k * t / T)).max())

# series b repeats series a two days later
w = 2 * np.pi * k / T
a = np.cos(w * t)
b = np.cos(w * (t - 2))
C = chpca.correlation(hilbert.complexify(np.vstack([a, b]))).matrix
print("theta[b, a] =", np.angle(C[1, 0]), " w * 2 =", 2 * w)
