"""bodikit: Bayesian optimization over binary, categorical, and mixed spaces
via dictionary-based Hamming embeddings."""

__version__ = "0.1.0"

from . import acquisition, benchmarks, combinatorics, engine, surrogate  # noqa: F401
from .combinatorics import Dictionary, DictionaryKind, Point, SearchSpace  # noqa: F401
from .engine import BoConfig, run_bodi  # noqa: F401
from .records import RunRecord  # noqa: F401
