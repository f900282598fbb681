"""Batch experiment runner: YAML configs in, CSV/JSON results out."""
