"""
Tests for sgisim application.
"""
