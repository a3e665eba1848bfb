"""Desk-scale multimodal driving stack.

2D town simulator, A* route planning, camera/lidar/radar synthesis with a
fused range-speed image, an imitation-learned policy with a Gaussian-mixture
motion head, variance-gated dual-action control, and an online benchmark.
"""

__version__ = "0.1.0"
