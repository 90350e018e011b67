"""Complex Hilbert PCA toolkit."""
