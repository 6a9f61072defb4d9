"""Tests for fracdelay."""
