"""Offline figure scripts for the splitfem-rsw solver outputs.

Pure post-processing: every figure is a deterministic function of the input
CSV files (fixed SVG hash salt, no timestamps), so reruns on identical data
produce identical SVG text.
"""

__version__ = "0.1.0"

from .figures import FigureSpec, highpass, plot, spectral_centroid, trailing_window

__all__ = ["FigureSpec", "highpass", "plot", "spectral_centroid", "trailing_window", "__version__"]
