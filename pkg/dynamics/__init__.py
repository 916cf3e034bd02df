"""Numerical core: gamma kernel, classical moments, density matrices, sensitivity analysis."""
