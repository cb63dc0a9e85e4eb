"""Arena-style Bradley-Terry leaderboards for RAG systems, plus a feature-based surrogate judge."""
from ._backend import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
