"""X-ray iteration for covering self-correspondences of the thrice-punctured sphere."""

__version__ = "0.1.0"
