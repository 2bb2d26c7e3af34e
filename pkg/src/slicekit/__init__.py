"""slicekit: slice discovery and shortcut-learning audits for binary classifiers."""

__version__ = "0.1.0"
