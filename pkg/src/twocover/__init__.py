"""Two-cover descent on plane quartics with all 28 bitangents rational."""

__version__ = "0.1.0"
