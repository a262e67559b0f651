"""Prompt generation, Haar subbands, fusion arithmetic and COD evaluation
metrics for multi-prompt camouflaged object segmentation."""

__version__ = "0.1.0"
