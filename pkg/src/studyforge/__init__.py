"""studyforge: retrieval-augmented academic content engine."""

__version__ = "0.1.0"
