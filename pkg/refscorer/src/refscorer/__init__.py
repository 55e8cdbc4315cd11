"""Graph convolution detector served over the scorer wire protocol."""

__version__ = "0.1.0"
