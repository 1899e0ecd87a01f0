"""Reference server for the t2ieval model-backend wire protocol.

Two modes: mock serves recorded fixtures keyed by request hash (so the
evaluation harness runs fully offline), real binds locally runnable models.
Either way every response is validated against the shared protocol schemas
before it leaves the process.
"""

from .app import create_app
from .config import ShimConfig

__all__ = ["ShimConfig", "create_app"]
__version__ = "0.1.0"
