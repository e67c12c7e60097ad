"""Classification and order reduction of fourth-order ODEs linearizable after reduction."""

__version__ = "0.1.0"
