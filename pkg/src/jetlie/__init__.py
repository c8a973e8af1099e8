"""Exact jet calculus for the Titeica surfaces PDE."""
