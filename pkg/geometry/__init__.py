"""Exact symbolic engine for Poisson stacks, generalized complex and shifted symplectic checks."""
