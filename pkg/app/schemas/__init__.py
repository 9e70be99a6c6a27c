"""Pydantic schemas for jobs, exported documents and fixtures."""
