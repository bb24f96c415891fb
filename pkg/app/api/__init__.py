"""API routers"""
from app.api import monitor, synthesis

__all__ = ["monitor", "synthesis"]
