"""In-memory HTAP engine with a virtual-time cost model of a vault-partitioned memory stack.

The transactional island keeps rows; the analytical island keeps a
dictionary-encoded column replica kept fresh by log propagation. The
``harness`` package composes these into the four compared systems.
"""
from .errors import HtapError

__version__ = "0.1.0"

__all__ = ["HtapError", "__version__"]
