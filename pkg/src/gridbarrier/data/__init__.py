"""Bundled feeder and scenario data files."""
