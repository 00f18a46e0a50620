"""ddsim-figures: regenerate figure panels from ddsim result CSVs."""

__version__ = "0.1.0"
