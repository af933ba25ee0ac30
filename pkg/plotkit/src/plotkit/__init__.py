"""Figure rendering for downlink rate-splitting experiment CSVs.

Strictly downstream of the simulator's published CSV schema: this package
never imports the simulator, only reads its result files.
"""

from .figures import (
    RATE_REGION,
    WSR_CURVES,
    FigureSpec,
    FigureSummary,
    Series,
    plot_rate_region,
    plot_wsr_curves,
)
from .reader import COLUMN_NAMES, ResultRow, SchemaError, read_rows

__version__ = "0.1.0"
