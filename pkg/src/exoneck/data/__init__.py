"""Bundled data files: default suit description and benchtop references."""
