"""Tests for fqe-inference."""
