"""Exact differential cohomology of finite simplicial sets and pairs."""

__version__ = "0.1.0"
