"""Random covers, non-backtracking spectra and tangles."""

__version__ = "0.1.0"
