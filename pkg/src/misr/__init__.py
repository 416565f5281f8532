"""Multi-frame super-resolution with end-to-end sub-location upscaling."""

__version__ = "0.1.0"
