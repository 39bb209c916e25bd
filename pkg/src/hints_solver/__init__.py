from importlib.metadata import version

try:
    __version__ = version("hints-solver")
except Exception:
    __version__ = "unknown"
