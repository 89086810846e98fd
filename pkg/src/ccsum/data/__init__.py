"""Bundled sample corpus for demos and end-to-end tests."""
