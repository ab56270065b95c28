"""Test suite for the HHO Cahn-Hilliard simulator."""
