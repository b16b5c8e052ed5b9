"""Parsing, generic instantiation and bounded checking of Event-B style
contexts and machines."""

__version__ = "0.1.0"
