"""Shape-based clustering, forecasting and power level decomposition of household load curves."""

__version__ = "0.1.0"
