"""Vertical-transport operations: telemetry ingestion, analytics, status
monitoring, multi-modal route planning, and a deterministic fleet simulator."""

__version__ = "0.1.0"
