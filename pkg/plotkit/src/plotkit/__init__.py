"""Publication-style rendering of revealbandit harness CSVs."""

from .figures import (
    FigureSpec,
    SchemaError,
    plot_regret_curves,
    plot_scatter,
    render_table1,
)

__version__ = "0.1.0"
