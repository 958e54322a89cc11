"""Tests for wsdict."""
