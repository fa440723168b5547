"""HTTP service exposing the planning, evaluation, and analysis pipeline.

Request/response schemas live in :mod:`capfirm.service.schemas`; handler
functions in :mod:`capfirm.service.handlers` are plain schema-to-schema
functions, so the CLI can call them in-process while remote clients go
through the FastAPI app in :mod:`capfirm.service.app`.
"""

from .app import app

__all__ = ["app"]
