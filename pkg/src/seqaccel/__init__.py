"""Initial guesses for sequences of slowly varying sparse linear systems."""
__version__ = "0.1.0"
