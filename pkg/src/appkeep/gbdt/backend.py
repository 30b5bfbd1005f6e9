"""Split-kernel selection.

The compiled extension is used when it built successfully; otherwise the
numpy implementation takes over.  Set APPKEEP_FORCE_PURE=1 to force the
fallback (used by the benchmark and for debugging); both kernels return
bit-identical results.
"""

import os

if os.environ.get("APPKEEP_FORCE_PURE") == "1":
    from ._scan_py import scan_column

    BACKEND = "python"
else:
    try:
        from ._scan import scan_column  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from ._scan_py import scan_column  # type: ignore[no-redef]

        BACKEND = "python"

__all__ = ["scan_column", "BACKEND"]
