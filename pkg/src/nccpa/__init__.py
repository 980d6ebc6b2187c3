"""Channel-charting-assisted non-orthogonal pilot allocation for near-field XL-MIMO."""

__version__ = "0.1.0"
