"""Standalone renderer turning ppemu JSON artifacts into diagnostic figures.

Communicates with the emulator toolkit through files only: it reads the
documented JSON artifacts and writes png/svg images plus an optional debug
manifest describing what was drawn.
"""

__version__ = "0.1.0"

FIGURE_KINDS = (
    "rmse_curve",
    "variability_grid",
    "grouped_bars",
    "r2_scatter",
    "learning_curve",
)
