"""Test package initialisation."""

