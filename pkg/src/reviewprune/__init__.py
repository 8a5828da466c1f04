"""reviewprune: recommends user-driven deletion of mobile-app UI
functionality from app review corpora, with a full evaluation harness."""

__version__ = "0.1.0"

__all__ = [
    "corpus",
    "textprep",
    "informative",
    "uiextract",
    "linker",
    "topics",
    "signals",
    "recommender",
    "evaluation",
    "cli",
]
