"""Storage utilities for run artifacts."""
