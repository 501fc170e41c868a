"""Terminal rendering for the repliq command line."""

from .display import Display, Theme

__all__ = [
    "Display",
    "Theme",
]
