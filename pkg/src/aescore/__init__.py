"""Photo aesthetics toolkit: dataset curation, CNN, baselines, scoring service."""

__version__ = "0.1.0"
