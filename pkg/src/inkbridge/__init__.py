"""inkbridge: evaluation toolkit for bidirectional painting/poem generation.

Pure numerical operations over externally produced model outputs (feature
matrices, per-character log-probabilities, discriminator score grids,
reconstructions), exposed as a library, a FastAPI service, and a CLI.
"""

__version__ = "0.1.0"
