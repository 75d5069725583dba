"""handscribe: an annotation engine for handwritten-text pages.

Pipeline stages: detector-output decoding and suppression, interactive
box/reading-order editing, CNN + multidimensional-LSTM + CTC word
recognition, spell correction, and export of ordered transcripts and
word-crop datasets.
"""

__version__ = "0.1.0"
