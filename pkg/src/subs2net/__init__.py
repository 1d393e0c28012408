"""subs2net: movie subtitles and cast lists to character interaction networks."""

__version__ = "0.1.0"
