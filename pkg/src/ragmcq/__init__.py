"""Retrieval-augmented answering strategies and an offline-testable
evaluation harness for multiple-choice medical QA."""

__version__ = "0.1.0"
