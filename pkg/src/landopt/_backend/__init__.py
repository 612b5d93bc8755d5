"""Tree-kernel backend selection.

The compiled extension is preferred when importable; the numpy reference
implementation is the fallback. Both grow bit-identical trees. Set
``LANDOPT_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pytree

if os.environ.get("LANDOPT_PURE_PYTHON") == "1":
    _impl = _pytree
    BACKEND = "python"
else:
    try:
        from . import _ctree as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pytree
        BACKEND = "python"

build_tree = _impl.build_tree
build_tree_python = _pytree.build_tree
