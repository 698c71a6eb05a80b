"""Trojan insertion and detection for compiled QAOA Max-Cut circuits."""

__version__ = "0.1.0"
