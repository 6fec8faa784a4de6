"""Sequential weak-measurement correlation spectroscopy of a spin-1/2 target."""

__version__ = "0.1.0"
