"""Household energy management engine.

Ingests per-device power traces, extracts usage events, prices them under a
time-of-use tariff, and generates ranked, personalized efficiency advices
that adapt to explicit user feedback.
"""

__version__ = "0.1.0"
