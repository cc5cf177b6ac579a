from .cleaning import CleaningRule, clean  # noqa: F401
from .categorize import CategoryRule, categorize  # noqa: F401
from .indexing import InvertedIndex, build_index, search, tokenize  # noqa: F401
from .datasets import DatasetSpec, RecordFilter, materialize_dataset  # noqa: F401
