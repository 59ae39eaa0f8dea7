__all__ = ["console"]

from rich.console import Console

console = Console()
