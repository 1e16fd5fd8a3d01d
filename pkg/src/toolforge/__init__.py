"""Dynamic tool search and loading for ReAct agents over large tool registries."""

__version__ = "0.1.0"
