"""Exact computations with mixed complexes, Hochschild invariants and Witt vectors."""
