"""Closed-loop supply chain network design with cost, emission and worker-risk objectives."""

__version__ = "0.1.0"
