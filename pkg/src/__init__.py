# src/__init__.py
"""gabor-instability-lab: adversarial Gaussian pairs, Gabor magnitudes and their stability certificates."""
__version__ = "0.1.0"
TOOL_NAME = "gabor-instability-lab"
