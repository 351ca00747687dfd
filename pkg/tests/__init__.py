"""Tests for parafree.

Unit tests run on coarse grids; desk-scale checks are marked `slow`.
"""
