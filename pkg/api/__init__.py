# api/__init__.py
"""
Sticky toolkit HTTP API package.
"""
