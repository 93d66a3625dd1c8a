"""Python interface to the behavioural type checker and interpreter."""

try:
    from mungo._mungo import check, reprint, run, verify
except ImportError:  # build-tree layout: extension next to the package
    from _mungo import check, reprint, run, verify

__all__ = ["check", "run", "verify", "reprint"]
