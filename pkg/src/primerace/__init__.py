"""Prime number races: characters, zeros, explicit formulae and limiting distributions."""

__version__ = "0.1.0"
