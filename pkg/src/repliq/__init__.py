"""repliq - directional replicability r-values for primary/follow-up study designs."""

__version__ = "0.1.0"
