"""Regularizer math, network engine and experiment runners."""
