"""Config-driven scenario runner."""
