"""Integration test package placeholder."""

