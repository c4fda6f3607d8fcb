"""Figure rendering for ftpit result files."""

from .render import KINDS, RenderReport, SchemaError, render

__version__ = "0.1.0"
