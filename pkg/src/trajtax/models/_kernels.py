"""Pick the tree-growing backend at import time.

The compiled extension is used when it imports; setting
``TRAJTAX_PURE_PYTHON=1`` forces the NumPy fallback.
"""

import os

if os.environ.get("TRAJTAX_PURE_PYTHON", "") not in ("", "0"):
    from trajtax.models import _tree_py as core
else:
    try:
        from trajtax.models import _tree_core as core
    except ImportError:  # extension not built
        from trajtax.models import _tree_py as core

BACKEND = "cython" if core.__name__.endswith("_tree_core") else "python"

grow_gini_tree = core.grow_gini_tree
grow_newton_tree = core.grow_newton_tree
apply_tree = core.apply_tree
