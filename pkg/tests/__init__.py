"""Tests for Syzygy."""
