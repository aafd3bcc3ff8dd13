"""Risk-on/risk-off backtesting with a stress index and a news sentiment signal."""

__version__ = "0.1.0"
