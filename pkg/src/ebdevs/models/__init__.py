"""Agent-based models built on the kernel."""
