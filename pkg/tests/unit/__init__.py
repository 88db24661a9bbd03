"""Unit test package placeholder."""

