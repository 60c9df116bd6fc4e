"""freqlift: short-interval exponential sums, circle-group phase gluing,
iterative frequency lifting, and pretentious-distance evaluation for
1-bounded multiplicative functions."""

__version__ = "0.1.0"
