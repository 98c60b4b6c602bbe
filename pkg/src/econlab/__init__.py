"""econlab: a deterministic economic simulation lab with a tool-protocol
job runner, literature retrieval, structured research memory, and a
hypothesis-to-analysis experiment workflow.
"""

__version__ = "0.1.0"
