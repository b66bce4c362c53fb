"""
Routers package
"""

__all__ = ["bench", "model"]
