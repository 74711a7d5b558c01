"""qclab: detecting quantum chaos in billiards and spin chains with
eigensolvers, level statistics and small neural networks."""

__version__ = "0.1.0"
