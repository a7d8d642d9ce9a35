"""Videoconferencing over sparse LEO constellations with handover-aware pacing-queue limits."""

__version__ = "0.1.0"
