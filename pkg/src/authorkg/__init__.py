"""Author-centric research knowledge graph pipeline and exploration service."""

__version__ = "0.1.0"
