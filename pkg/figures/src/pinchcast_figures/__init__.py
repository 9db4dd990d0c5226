"""Figure rendering for pinchcast sweep results."""

from .render import (FIGURE_PRESETS, FigureData, FigureSpec, Series,
                     ValidationError, aggregate, read_rows, render_figure)

__version__ = "0.1.0"
