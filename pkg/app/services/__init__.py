"""Computational services: exact arithmetic through bases and exports."""
