"""Dual-teacher knowledge distillation for function-level vulnerability detection."""

__version__ = "0.1.0"
