"""Weak Poincare rate functions for convolution probability measures.

The pipeline: build a convolution model (model), certify a Lyapunov drift rate
phi for it (lyapunov), invert the sublevel tails of phi into the rate function
alpha (rates), and validate alpha by Monte Carlo (verify).  presets bundles the
standard potential/measure combinations; cli orchestrates batch runs.
"""

from . import errors, model, lyapunov, rates, verify, presets

__version__ = "0.1.0"
