"""Tests for polcoh."""
