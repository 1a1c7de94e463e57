"""Physics-informed neural network training lab with the MultiAdam optimizer."""

__version__ = "0.1.0"
