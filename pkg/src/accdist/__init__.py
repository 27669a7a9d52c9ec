"""Pronunciation-distance toolkit: acoustic (MFCC/neural + DTW) and
transcription-based (PMI Levenshtein) speaker differences, with the
statistics used to evaluate them against human accent ratings."""

__version__ = "0.1.0"
