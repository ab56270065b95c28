"""Command line interface of the HHO Cahn-Hilliard simulator."""
