"""Single-player p2p topology game: environment, coordinate oracle and bandit agent."""

__version__ = "0.1.0"
