"""Band-limited phase-inversion listening-test workbench."""

__version__ = "0.1.0"
