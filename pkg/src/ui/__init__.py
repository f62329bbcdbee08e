from .menu import MenuUI, console

__all__ = ["MenuUI", "console"]
