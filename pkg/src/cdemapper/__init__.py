"""cdemapper: map local research data elements to NIH Common Data Elements."""

__version__ = "0.1.0"
