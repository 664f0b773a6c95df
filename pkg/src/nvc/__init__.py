"""Learned video codec: VAE compressors for intra pixels, inter motion and
inter residuals, multiscale motion compensation, and a range-coded
container format."""

__version__ = "0.1.0"
