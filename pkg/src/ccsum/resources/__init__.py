"""Wordlists used by tokenization and sentence segmentation."""
